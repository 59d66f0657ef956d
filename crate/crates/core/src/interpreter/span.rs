use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A time range in seconds with open or closed ends. Always has positive
/// length: zero-length pieces are dropped by every operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub start: f64,
    pub end: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub start_open: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub end_open: bool,
}

impl Span {
    pub fn closed(start: f64, end: f64) -> Self {
        Self {
            start,
            end,
            start_open: false,
            end_open: false,
        }
    }

    pub fn open_closed(start: f64, end: f64) -> Self {
        Self {
            start_open: true,
            ..Self::closed(start, end)
        }
    }

    pub fn closed_open(start: f64, end: f64) -> Self {
        Self {
            end_open: true,
            ..Self::closed(start, end)
        }
    }

    /// Everything strictly after `t`.
    pub fn after(t: f64) -> Self {
        Self {
            start: t,
            end: f64::INFINITY,
            start_open: true,
            end_open: true,
        }
    }

    /// Everything strictly before `t`.
    pub fn before(t: f64) -> Self {
        Self {
            start: f64::NEG_INFINITY,
            end: t,
            start_open: true,
            end_open: true,
        }
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        let lo = if self.start_open { t > self.start } else { t >= self.start };
        let hi = if self.end_open { t < self.end } else { t <= self.end };
        lo && hi
    }

    pub fn intersect(&self, other: &Span) -> Option<Span> {
        let (start, start_open) = match self.start.partial_cmp(&other.start) {
            Some(Ordering::Greater) => (self.start, self.start_open),
            Some(Ordering::Less) => (other.start, other.start_open),
            _ => (self.start, self.start_open || other.start_open),
        };
        let (end, end_open) = match self.end.partial_cmp(&other.end) {
            Some(Ordering::Less) => (self.end, self.end_open),
            Some(Ordering::Greater) => (other.end, other.end_open),
            _ => (self.end, self.end_open || other.end_open),
        };
        (start < end).then_some(Span {
            start,
            end,
            start_open,
            end_open,
        })
    }

    /// Overlap length with `[start, end]`.
    pub fn overlap_len(&self, start: f64, end: f64) -> f64 {
        self.intersect(&Span::closed(start, end))
            .map_or(0.0, |s| s.len())
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.start_open { '(' } else { '[' },
            self.start,
            self.end,
            if self.end_open { ')' } else { ']' }
        )
    }
}

/// Sorted, non-overlapping spans. Pieces that touch at a point covered by
/// either side are coalesced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Span>", into = "Vec<Span>")]
pub struct SpanSet(Vec<Span>);

impl SpanSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn single(span: Span) -> Self {
        Self::from_spans(vec![span])
    }

    pub fn from_spans(mut spans: Vec<Span>) -> Self {
        spans.retain(|s| s.start < s.end);
        spans.sort_by(|a, b| {
            a.start
                .total_cmp(&b.start)
                .then(a.start_open.cmp(&b.start_open))
        });
        let mut out: Vec<Span> = Vec::with_capacity(spans.len());
        for s in spans {
            if let Some(last) = out.last_mut() {
                let joins = s.start < last.end
                    || (s.start == last.end && !(last.end_open && s.start_open));
                if joins {
                    match s.end.total_cmp(&last.end) {
                        Ordering::Greater => {
                            last.end = s.end;
                            last.end_open = s.end_open;
                        }
                        Ordering::Equal => last.end_open &= s.end_open,
                        Ordering::Less => {}
                    }
                    continue;
                }
            }
            out.push(s);
        }
        Self(out)
    }

    pub fn spans(&self) -> &[Span] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.0.iter().map(Span::len).sum()
    }

    pub fn contains(&self, t: f64) -> bool {
        self.0.iter().any(|s| s.contains(t))
    }

    pub fn intersect_span(&self, window: &Span) -> SpanSet {
        Self::from_spans(self.0.iter().filter_map(|s| s.intersect(window)).collect())
    }

    /// Total overlap with `[start, end]`.
    pub fn overlap_len(&self, start: f64, end: f64) -> f64 {
        self.0.iter().map(|s| s.overlap_len(start, end)).sum()
    }

    pub fn is_subset_of(&self, other: &SpanSet) -> bool {
        self.0.iter().all(|s| {
            other.0.iter().any(|o| o.intersect(s).is_some_and(|i| i == *s))
        })
    }
}

impl TryFrom<Vec<Span>> for SpanSet {
    type Error = String;

    fn try_from(spans: Vec<Span>) -> Result<Self, Self::Error> {
        for s in &spans {
            if !(s.start.is_finite() && s.end.is_finite()) || s.start > s.end {
                return Err(format!("invalid span {s}"));
            }
        }
        Ok(Self::from_spans(spans))
    }
}

impl From<SpanSet> for Vec<Span> {
    fn from(set: SpanSet) -> Self {
        set.0
    }
}

impl fmt::Display for SpanSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("{}");
        }
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∪ ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::span::{Span, SpanSet};
use crate::registry::SemType;

/// Runtime values. The JSON form is `{"type": <SemType>, "value": ...}`,
/// the encoding shared with remote backends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value")]
pub enum Value {
    Video(VideoRef),
    Interval(Interval),
    Region(Region),
    PoseSequence(Vec<PoseFrame>),
    Text(String),
    Number(f64),
    Bool(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start_s: f64,
    pub end_s: f64,
}

/// Normalized bounding box; every field lies in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseFrame {
    pub t_s: f64,
    /// Keypoint name → normalized `[x, y]`.
    pub keypoints: BTreeMap<String, [f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EffectKind {
    BgBlur,
    ColorPop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Effect {
    pub kind: EffectKind,
    pub object: String,
}

/// A piece of one source video: the kept spans plus view and effect
/// annotations. No pixels are ever touched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clip {
    pub source: String,
    pub duration_s: f64,
    pub spans: SpanSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view: Option<Region>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub effects: Vec<Effect>,
}

/// Symbolic video: clips played in order. A plain input video is a single
/// clip spanning its whole source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRef {
    pub clips: Vec<Clip>,
}

impl Value {
    pub fn sem_type(&self) -> SemType {
        match self {
            Value::Video(_) => SemType::Video,
            Value::Interval(_) => SemType::Interval,
            Value::Region(_) => SemType::Region,
            Value::PoseSequence(_) => SemType::PoseSequence,
            Value::Text(_) => SemType::Text,
            Value::Number(_) => SemType::Number,
            Value::Bool(_) => SemType::Bool,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_video(&self) -> Option<&VideoRef> {
        match self {
            Value::Video(v) => Some(v),
            _ => None,
        }
    }

    /// Checks the invariants a value must hold to be passed between steps.
    pub fn check(&self) -> Result<(), String> {
        match self {
            Value::Interval(i) => i.check(),
            Value::Region(r) => r.check(),
            Value::Video(v) => v.clips.iter().try_for_each(|c| {
                if let Some(view) = &c.view {
                    view.check()?;
                }
                let inside = c
                    .spans
                    .spans()
                    .iter()
                    .all(|s| s.start >= 0.0 && s.end <= c.duration_s);
                if inside {
                    Ok(())
                } else {
                    Err(format!("clip of '{}' has spans outside its source", c.source))
                }
            }),
            Value::Number(n) if !n.is_finite() => Err("number is not finite".into()),
            _ => Ok(()),
        }
    }
}

impl Interval {
    pub fn new(start_s: f64, end_s: f64) -> Self {
        Self { start_s, end_s }
    }

    fn check(&self) -> Result<(), String> {
        if self.start_s >= 0.0 && self.end_s >= self.start_s {
            Ok(())
        } else {
            Err(format!("invalid interval ({}, {})", self.start_s, self.end_s))
        }
    }
}

impl Region {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn full() -> Self {
        Self::new(0.0, 0.0, 1.0, 1.0)
    }

    fn check(&self) -> Result<(), String> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if unit(self.x) && unit(self.y) && unit(self.w) && unit(self.h) {
            Ok(())
        } else {
            Err(format!("region {self} is not normalized"))
        }
    }

    /// `inner` is relative to `self`; the result is relative to the frame.
    pub fn compose(&self, inner: &Region) -> Region {
        Region {
            x: self.x + inner.x * self.w,
            y: self.y + inner.y * self.h,
            w: inner.w * self.w,
            h: inner.h * self.h,
        }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn iou(&self, other: &Region) -> f64 {
        let ix = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let iy = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        if ix <= 0.0 || iy <= 0.0 {
            return 0.0;
        }
        let inter = ix * iy;
        inter / (self.area() + other.area() - inter)
    }
}

impl Clip {
    pub fn full(source: impl Into<String>, duration_s: f64) -> Self {
        Self {
            source: source.into(),
            duration_s,
            spans: SpanSet::single(Span::closed(0.0, duration_s)),
            view: None,
            effects: Vec::new(),
        }
    }
}

impl VideoRef {
    pub fn full(source: impl Into<String>, duration_s: f64) -> Self {
        Self {
            clips: vec![Clip::full(source, duration_s)],
        }
    }

    pub fn handle(&self) -> String {
        self.clips
            .iter()
            .map(|c| c.source.as_str())
            .collect::<Vec<_>>()
            .join("+")
    }

    /// Total kept playback time.
    pub fn duration(&self) -> f64 {
        self.clips.iter().map(|c| c.spans.duration()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.iter().all(|c| c.spans.is_empty())
    }

    pub fn map_clips(&self, f: impl Fn(&Clip) -> Clip) -> VideoRef {
        VideoRef {
            clips: self.clips.iter().map(f).collect(),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Region({}, {}, {}, {})", self.x, self.y, self.w, self.h)
    }
}

impl fmt::Display for VideoRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Video(")?;
        for (i, c) in self.clips.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}: {}", c.source, c.spans)?;
            if let Some(v) = &c.view {
                write!(f, " crop {v}")?;
            }
            for e in &c.effects {
                let k = match e.kind {
                    EffectKind::BgBlur => "bgblur",
                    EffectKind::ColorPop => "colorpop",
                };
                write!(f, " {k}('{}')", e.object)?;
            }
        }
        f.write_str(")")
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Video(v) => write!(f, "{v}"),
            Value::Interval(i) => write!(f, "Interval({}, {})", i.start_s, i.end_s),
            Value::Region(r) => write!(f, "{r}"),
            Value::PoseSequence(frames) => match (frames.first(), frames.last()) {
                (Some(a), Some(b)) => write!(f, "PoseSequence({} frames, {}s..{}s)", frames.len(), a.t_s, b.t_s),
                _ => f.write_str("PoseSequence(0 frames)"),
            },
            Value::Text(t) => write!(f, "{t:?}"),
            Value::Number(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

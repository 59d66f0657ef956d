use std::collections::BTreeMap;
use std::time::Duration;

use super::backend::{interval_arg, number_arg, region_arg, text_arg, video_arg, Backend, BackendError, ExecutorKind};
use super::span::Span;
use super::value::{Clip, Effect, EffectKind, Interval, Region, Value, VideoRef};

/// Keeps `[start, end]` of every clip.
pub fn trim(video: &VideoRef, start: f64, end: f64) -> VideoRef {
    let window = Span::closed(start, end);
    video.map_clips(|c| Clip {
        spans: c.spans.intersect_span(&window),
        ..c.clone()
    })
}

/// Keeps what comes strictly after the interval ends.
pub fn trim_after(video: &VideoRef, interval: &Interval) -> VideoRef {
    let window = Span::after(interval.end_s);
    video.map_clips(|c| Clip {
        spans: c.spans.intersect_span(&window),
        ..c.clone()
    })
}

/// Keeps what comes strictly before the interval starts.
pub fn trim_before(video: &VideoRef, interval: &Interval) -> VideoRef {
    let window = Span::before(interval.start_s);
    video.map_clips(|c| Clip {
        spans: c.spans.intersect_span(&window),
        ..c.clone()
    })
}

pub fn merge(first: &VideoRef, second: &VideoRef) -> VideoRef {
    VideoRef {
        clips: first.clips.iter().chain(&second.clips).cloned().collect(),
    }
}

pub fn crop(video: &VideoRef, region: &Region) -> VideoRef {
    video.map_clips(|c| Clip {
        view: Some(c.view.unwrap_or_else(Region::full).compose(region)),
        ..c.clone()
    })
}

pub fn add_effect(video: &VideoRef, kind: EffectKind, object: &str) -> VideoRef {
    video.map_clips(|c| {
        let mut c = c.clone();
        c.effects.push(Effect {
            kind,
            object: object.to_owned(),
        });
        c
    })
}

/// Executors for the editing functions that need no model.
#[derive(Debug, Clone, Copy, Default)]
pub struct PureBackend;

impl Backend for PureBackend {
    fn kind(&self) -> ExecutorKind {
        ExecutorKind::BuiltinPure
    }

    fn invoke(
        &self,
        function: &str,
        args: &BTreeMap<String, Value>,
        _timeout: Duration,
    ) -> Result<Value, BackendError> {
        let video = || video_arg(args, "video");
        let out = match function {
            "TRIM" => trim(video()?, *number_arg(args, "start")?, *number_arg(args, "end")?),
            "TRIMAFTER" => trim_after(video()?, interval_arg(args, "interval")?),
            "TRIMBEFORE" => trim_before(video()?, interval_arg(args, "interval")?),
            "MERGE" => merge(video_arg(args, "video0")?, video_arg(args, "video1")?),
            "CROP" => crop(video()?, region_arg(args, "region")?),
            "BGBLUR" => add_effect(video()?, EffectKind::BgBlur, text_arg(args, "object")?),
            "COLORPOP" => add_effect(video()?, EffectKind::ColorPop, text_arg(args, "object")?),
            other => return Err(BackendError::Unsupported(other.to_owned())),
        };
        Ok(Value::Video(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpreter::span::SpanSet;

    fn ten() -> VideoRef {
        VideoRef::full("v", 10.0)
    }

    #[test]
    fn trim_after_interval() {
        let out = trim_after(&ten(), &Interval::new(2.0, 3.5));
        assert_eq!(out.clips[0].spans.spans(), [Span::open_closed(3.5, 10.0)]);
        assert_eq!(out.duration(), 6.5);
    }

    #[test]
    fn degenerate_trim_is_empty() {
        let out = trim(&ten(), 0.0, 0.0);
        assert!(out.clips[0].spans.is_empty());
        assert!(out.is_empty());
    }

    #[test]
    fn merge_with_empty() {
        let v = trim(&ten(), 1.0, 4.0);
        let empty = trim(&ten(), 0.0, 0.0);
        let m = merge(&v, &empty);
        assert_eq!(m.clips[0], v.clips[0]);
        assert_eq!(m.duration(), v.duration());
        assert_eq!(m.handle(), "v+v");
    }

    #[test]
    fn crop_and_effects_annotate() {
        let r = Region::new(0.25, 0.25, 0.5, 0.5);
        let c = crop(&crop(&ten(), &r), &Region::new(0.0, 0.0, 0.5, 0.5));
        assert_eq!(c.clips[0].view, Some(Region::new(0.25, 0.25, 0.25, 0.25)));
        assert_eq!(c.duration(), 10.0);
        let e = add_effect(&c, EffectKind::ColorPop, "dog");
        assert_eq!(e.clips[0].effects.len(), 1);
        assert_eq!(e.to_string(), "Video(v: [0, 10] crop Region(0.25, 0.25, 0.25, 0.25) colorpop('dog'))");
    }

    #[test]
    fn trim_before_is_open_at_start() {
        let out = trim_before(&ten(), &Interval::new(3.0, 4.0));
        assert_eq!(out.clips[0].spans, SpanSet::single(Span::closed_open(0.0, 3.0)));
    }

    #[test]
    fn backend_dispatch() {
        let mut args = BTreeMap::new();
        args.insert("video".to_owned(), Value::Video(ten()));
        args.insert("start".to_owned(), Value::Number(2.0));
        args.insert("end".to_owned(), Value::Number(5.0));
        let out = PureBackend.invoke("TRIM", &args, Duration::from_secs(1)).unwrap();
        assert_eq!(out.as_video().unwrap().duration(), 3.0);
        assert!(matches!(
            PureBackend.invoke("VQA", &args, Duration::from_secs(1)),
            Err(BackendError::Unsupported(_))
        ));
        args.insert("end".to_owned(), Value::Text("five".into()));
        assert!(matches!(
            PureBackend.invoke("TRIM", &args, Duration::from_secs(1)),
            Err(BackendError::BadArgs(_))
        ));
    }
}

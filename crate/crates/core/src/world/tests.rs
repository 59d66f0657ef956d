use proptest::prelude::*;

use super::*;
use crate::interpreter::{crop, merge, trim, trim_after, Span, SpanSet};

fn towel() -> VideoDescriptor {
    VideoDescriptor::new("towel", 10.0)
        .with_event("enter room", 2.0, 3.5, "man")
        .with_event("pick up towel", 4.0, 6.0, "man")
        .with_event("dry face", 6.5, 7.5, "man")
}

fn world() -> World {
    World::single(towel())
}

#[test]
fn grounding_by_token_overlap() {
    let i = mock_grounding(&towel(), "man enters room").unwrap();
    assert_eq!(i, Interval::new(2.0, 3.5));
    assert!(matches!(mock_grounding(&towel(), "zebra crossing"), Err(BackendError::NoMatch(_))));
}

#[test]
fn grounding_ties_go_to_earliest() {
    let d = VideoDescriptor::new("t", 10.0)
        .with_event("wave hand", 5.0, 6.0, "a")
        .with_event("wave flag", 1.0, 2.0, "a");
    assert_eq!(mock_grounding(&d, "wave").unwrap(), Interval::new(1.0, 2.0));
}

#[test]
fn vqa_after_entering() {
    let w = world();
    let after = trim_after(&w.input_video("towel").unwrap(), &Interval::new(2.0, 3.5));
    assert_eq!(mock_vqa(&w, &after, "what does the man do").unwrap(), "pick up towel");
    let empty = trim(&after, 0.0, 0.0);
    assert!(matches!(mock_vqa(&w, &empty, "what"), Err(BackendError::NoMatch(_))));
}

#[test]
fn qa_fact_overrides_event_heuristic() {
    let mut d = towel();
    d.qa_facts.push(QaFact {
        question_pattern: "what color is the towel".into(),
        answer: "blue".into(),
        start_s: Some(4.0),
        end_s: Some(6.0),
    });
    d.qa_facts.push(QaFact {
        question_pattern: "towel".into(),
        answer: "a towel".into(),
        start_s: None,
        end_s: None,
    });
    let w = World::single(d);
    let full = w.input_video("towel").unwrap();
    assert_eq!(mock_vqa(&w, &full, "What color is the towel?").unwrap(), "blue");
    assert_eq!(mock_vqa(&w, &full, "where is the towel").unwrap(), "a towel");
    // the timed fact is out of view, the untimed one still applies
    let late = trim(&full, 7.0, 10.0);
    assert_eq!(mock_vqa(&w, &late, "What color is the towel?").unwrap(), "a towel");
}

#[test]
fn grounding_in_trimmed_video_ignores_hidden_events() {
    let w = world();
    let late = trim(&w.input_video("towel").unwrap(), 4.0, 10.0);
    assert!(ground_in_video(&w, &late, "enter room").is_err());
    assert_eq!(ground_in_video(&w, &late, "towel").unwrap(), Interval::new(4.0, 6.0));
}

#[test]
fn unknown_source_is_no_match() {
    let w = world();
    let v = VideoRef::full("elsewhere", 5.0);
    assert!(matches!(mock_vqa(&w, &v, "what"), Err(BackendError::NoMatch(_))));
}

fn fall_scene() -> VideoDescriptor {
    let mut d = VideoDescriptor::new("fall", 8.0);
    d.objects.push(ObjectTrack {
        name: "old man".into(),
        region: Region::new(0.0, 0.0, 0.5, 1.0),
        start_s: 0.0,
        end_s: 8.0,
    });
    d.objects.push(ObjectTrack {
        name: "nurse".into(),
        region: Region::new(0.5, 0.0, 0.5, 1.0),
        start_s: 0.0,
        end_s: 8.0,
    });
    let keys = |labels: &[PoseLabel]| {
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| PoseKey { t_s: i as f64, label: *l })
            .collect::<Vec<_>>()
    };
    use PoseLabel::*;
    d.poses.insert(
        "old man".into(),
        keys(&[Standing, Standing, Standing, Falling, Falling, Falling, Falling]),
    );
    d.poses.insert("nurse".into(), keys(&[Standing; 7]));
    d
}

#[test]
fn fall_detection_on_tracked_person() {
    let w = World::single(fall_scene());
    let full = w.input_video("fall").unwrap();
    let region = mock_track(&w, &full, "old man").unwrap();
    let cropped = crop(&full, &region);
    let poses = mock_pose(&w, &cropped).unwrap();
    assert_eq!(poses.len(), 7);
    assert_eq!(mock_classifypose(&poses, "falling,standing").unwrap(), "falling");
    assert!(mock_classifypose(&poses, "sitting,lying").is_err());

    let nurse = crop(&full, &mock_track(&w, &full, "nurse").unwrap());
    let poses = mock_pose(&w, &nurse).unwrap();
    assert_eq!(mock_classifypose(&poses, "falling,standing").unwrap(), "standing");

    let early = trim(&cropped, 0.0, 2.5);
    let poses = mock_pose(&w, &early).unwrap();
    assert_eq!(poses.len(), 3);
    assert_eq!(mock_classifypose(&poses, "falling,standing").unwrap(), "standing");
}

#[test]
fn backend_dispatch_and_bindings() {
    let w = Arc::new(world());
    let b = standard_bindings(w.clone());
    assert!(b.check_complete(&crate::registry::builtin_catalog()).is_ok());
    assert_eq!(b.kind_of("VQA"), Some(ExecutorKind::MockWorld));
    assert_eq!(b.kind_of("TRIM"), Some(ExecutorKind::BuiltinPure));
    let mut args = BTreeMap::new();
    args.insert("video".to_owned(), Value::Video(w.input_video("towel").unwrap()));
    args.insert("query".to_owned(), Value::Text("enter room".into()));
    let out = b.get("GROUNDING").unwrap().invoke("GROUNDING", &args, Duration::from_secs(1)).unwrap();
    assert_eq!(out, Value::Interval(Interval::new(2.0, 3.5)));
}

#[test]
fn merged_videos_answer_from_either_source() {
    let mut w = world();
    w.insert(VideoDescriptor::new("beach", 5.0).with_event("build sandcastle", 0.0, 5.0, "kid"));
    let m = merge(&w.input_video("towel").unwrap(), &w.input_video("beach").unwrap());
    assert_eq!(mock_vqa(&w, &m, "what happens").unwrap(), "build sandcastle");
    assert_eq!(ground_in_video(&w, &m, "sandcastle").unwrap(), Interval::new(0.0, 5.0));
}

fn arb_descriptor() -> impl Strategy<Value = VideoDescriptor> {
    let labels = ["open door", "sit down", "read book", "wave hand", "drink water", "close door"];
    prop::collection::vec((0usize..labels.len(), 0u32..90, 1u32..30), 1..6).prop_map(move |evs| {
        let mut d = VideoDescriptor::new("p", 12.0);
        for (l, s, len) in evs {
            let start = s as f64 / 10.0;
            d = d.with_event(labels[l], start, start + len as f64 / 10.0, "x");
        }
        d
    })
}

proptest! {
    #[test]
    fn grounding_returns_an_event_interval(d in arb_descriptor(), q in "[a-z ]{0,20}") {
        if let Ok(i) = mock_grounding(&d, &q) {
            prop_assert!(d.events.iter().any(|e| e.start_s == i.start_s && e.end_s == i.end_s));
        }
    }

    #[test]
    fn vqa_is_span_monotone(d in arb_descriptor(), pad in 0u32..20) {
        let lo = d.events.iter().map(|e| e.start_s).fold(f64::INFINITY, f64::min);
        let hi = d.events.iter().map(|e| e.end_s).fold(0.0, f64::max);
        let w = World::single(d.clone());
        let full = w.input_video("p").unwrap();
        let mut covering = full.clone();
        covering.clips[0].spans = SpanSet::single(Span::closed(
            (lo - pad as f64 / 10.0).max(0.0),
            (hi + pad as f64 / 10.0).min(12.0),
        ));
        prop_assert_eq!(
            mock_vqa(&w, &full, "what happens").unwrap(),
            mock_vqa(&w, &covering, "what happens").unwrap()
        );
    }
}

//! Deterministic stand-ins for the model-backed functions, driven by
//! synthetic ground-truth descriptors.
//!
//! Every mock is a pure function of the descriptors and its arguments, so
//! whole pipelines can be checked against known answers.

mod descriptor;
pub mod pose;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Duration;

pub use descriptor::{DescriptorError, Event, ObjectTrack, PoseKey, QaFact, VideoDescriptor};
pub use pose::PoseLabel;

use crate::interpreter::backend::{poses_arg, text_arg, video_arg};
use crate::interpreter::{
    Backend, BackendError, Bindings, Clip, ExecutorKind, Interval, PoseFrame, PureBackend, Region, Value, VideoRef,
};
use crate::registry::{MODEL_FUNCTIONS, PURE_FUNCTIONS};

/// Descriptors by video id.
#[derive(Debug, Clone, Default)]
pub struct World {
    descriptors: BTreeMap<String, Arc<VideoDescriptor>>,
}

impl World {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(descriptor: VideoDescriptor) -> Self {
        Self::from_descriptors([descriptor])
    }

    pub fn from_descriptors(descriptors: impl IntoIterator<Item = VideoDescriptor>) -> Self {
        let mut w = Self::new();
        for d in descriptors {
            w.insert(d);
        }
        w
    }

    pub fn insert(&mut self, descriptor: VideoDescriptor) {
        self.descriptors
            .insert(descriptor.id.clone(), Arc::new(descriptor));
    }

    pub fn get(&self, id: &str) -> Option<&VideoDescriptor> {
        self.descriptors.get(id).map(Arc::as_ref)
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn input_video(&self, id: &str) -> Option<VideoRef> {
        self.get(id).map(VideoDescriptor::input_video)
    }

    fn clip_source(&self, clip: &Clip) -> Result<&VideoDescriptor, BackendError> {
        self.get(&clip.source)
            .ok_or_else(|| BackendError::NoMatch(format!("no descriptor for video '{}'", clip.source)))
    }
}

/// Lowercased alphanumeric tokens.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// `|query ∩ label| / |label|` over token sets.
pub fn overlap_score(query: &str, label: &str) -> f64 {
    let q: BTreeSet<String> = tokens(query).into_iter().collect();
    let l: BTreeSet<String> = tokens(label).into_iter().collect();
    if l.is_empty() {
        return 0.0;
    }
    q.intersection(&l).count() as f64 / l.len() as f64
}

fn covers(clip: &Clip, start: f64, end: f64) -> bool {
    if start == end {
        clip.spans.contains(start)
    } else {
        clip.spans.overlap_len(start, end) > 0.0
    }
}

/// Best-scoring event among `candidates`; ties go to the earliest start, then
/// to the earlier candidate.
fn best_event<'a>(candidates: impl IntoIterator<Item = &'a Event>, query: &str) -> Option<&'a Event> {
    let mut best: Option<(f64, &Event)> = None;
    for e in candidates {
        let score = overlap_score(query, &e.label);
        if score <= 0.0 {
            continue;
        }
        let better = match best {
            None => true,
            Some((bs, be)) => score > bs || (score == bs && e.start_s < be.start_s),
        };
        if better {
            best = Some((score, e));
        }
    }
    best.map(|(_, e)| e)
}

/// Interval of the descriptor event whose label best overlaps the query.
pub fn mock_grounding(descriptor: &VideoDescriptor, query: &str) -> Result<Interval, BackendError> {
    best_event(&descriptor.events, query)
        .map(|e| Interval::new(e.start_s, e.end_s))
        .ok_or_else(|| BackendError::NoMatch(format!("nothing in '{}' matches '{query}'", descriptor.id)))
}

/// Grounding restricted to the events the video still covers.
pub fn ground_in_video(world: &World, video: &VideoRef, query: &str) -> Result<Interval, BackendError> {
    let mut visible = Vec::new();
    for clip in &video.clips {
        let d = world.clip_source(clip)?;
        visible.extend(d.events.iter().filter(|e| covers(clip, e.start_s, e.end_s)));
    }
    best_event(visible, query)
        .map(|e| Interval::new(e.start_s, e.end_s))
        .ok_or_else(|| BackendError::NoMatch(format!("nothing in {} matches '{query}'", video.handle())))
}

fn normalized(text: &str) -> String {
    format!(" {} ", tokens(text).join(" "))
}

/// Answers from the longest QA-fact pattern contained in the question; with
/// no such fact, the label of the event with the most visible time.
pub fn mock_vqa(world: &World, video: &VideoRef, question: &str) -> Result<String, BackendError> {
    if video.is_empty() {
        return Err(BackendError::NoMatch(format!("video {} is empty", video.handle())));
    }
    let q = normalized(question);
    let mut fact: Option<(usize, &QaFact)> = None;
    let mut event: Option<(f64, &Event)> = None;
    for clip in video.clips.iter().filter(|c| !c.spans.is_empty()) {
        let d = world.clip_source(clip)?;
        for f in &d.qa_facts {
            let visible = match (f.start_s, f.end_s) {
                (Some(a), Some(b)) => covers(clip, a, b),
                _ => true,
            };
            let len = tokens(&f.question_pattern).len();
            if visible && len > 0 && q.contains(&normalized(&f.question_pattern)) && fact.is_none_or(|(bl, _)| len > bl) {
                fact = Some((len, f));
            }
        }
        for e in &d.events {
            let seen = clip.spans.overlap_len(e.start_s, e.end_s);
            if seen <= 0.0 {
                continue;
            }
            let better = match event {
                None => true,
                Some((bs, be)) => seen > bs || (seen == bs && e.start_s < be.start_s),
            };
            if better {
                event = Some((seen, e));
            }
        }
    }
    if let Some((_, f)) = fact {
        return Ok(f.answer.clone());
    }
    event
        .map(|(_, e)| e.label.clone())
        .ok_or_else(|| BackendError::NoMatch(format!("nothing visible in {} answers '{question}'", video.handle())))
}

/// Region of the best-matching object visible in the video.
pub fn mock_track(world: &World, video: &VideoRef, object: &str) -> Result<Region, BackendError> {
    let mut best: Option<(f64, &ObjectTrack)> = None;
    for clip in &video.clips {
        let d = world.clip_source(clip)?;
        for o in d.objects.iter().filter(|o| covers(clip, o.start_s, o.end_s)) {
            let score = overlap_score(object, &o.name);
            if score > 0.0 && best.is_none_or(|(bs, _)| score > bs) {
                best = Some((score, o));
            }
        }
    }
    best.map(|(_, o)| o.region)
        .ok_or_else(|| BackendError::NoMatch(format!("no '{object}' visible in {}", video.handle())))
}

/// The actor a clip shows: with a crop view, the actor whose tracked region
/// overlaps it most; otherwise the first actor with a pose script.
fn actor_in_view<'a>(d: &'a VideoDescriptor, clip: &Clip) -> Option<&'a str> {
    match clip.view {
        None => d.poses.keys().next().map(String::as_str),
        Some(view) => d
            .poses
            .keys()
            .filter_map(|actor| {
                let iou = d
                    .objects
                    .iter()
                    .filter(|o| o.name.eq_ignore_ascii_case(actor))
                    .map(|o| o.region.iou(&view))
                    .fold(0.0, f64::max);
                (iou > 0.0).then_some((iou, actor))
            })
            .fold(None::<(f64, &String)>, |acc, (iou, a)| match acc {
                Some((bi, _)) if bi >= iou => acc,
                _ => Some((iou, a)),
            })
            .map(|(_, a)| a.as_str()),
    }
}

/// Keypoint frames for the visible actor at every scripted pose key inside
/// the video's spans.
pub fn mock_pose(world: &World, video: &VideoRef) -> Result<Vec<PoseFrame>, BackendError> {
    let mut frames = Vec::new();
    for clip in &video.clips {
        let d = world.clip_source(clip)?;
        let Some(actor) = actor_in_view(d, clip) else { continue };
        frames.extend(
            d.poses[actor]
                .iter()
                .filter(|k| clip.spans.contains(k.t_s))
                .map(|k| k.label.frame(k.t_s)),
        );
    }
    if frames.is_empty() {
        Err(BackendError::NoMatch(format!("no poses visible in {}", video.handle())))
    } else {
        Ok(frames)
    }
}

pub fn mock_classifypose(poses: &[PoseFrame], labels: &str) -> Result<String, BackendError> {
    pose::majority_label(poses, labels)
        .ok_or_else(|| BackendError::NoMatch(format!("no frame matches any of '{labels}'")))
}

/// Serves GROUNDING, VQA, TRACK, POSE and CLASSIFYPOSE from a [`World`].
#[derive(Debug, Clone)]
pub struct MockWorldBackend {
    world: Arc<World>,
}

impl MockWorldBackend {
    pub fn new(world: Arc<World>) -> Self {
        Self { world }
    }

    pub fn world(&self) -> &World {
        &self.world
    }
}

impl Backend for MockWorldBackend {
    fn kind(&self) -> ExecutorKind {
        ExecutorKind::MockWorld
    }

    fn invoke(
        &self,
        function: &str,
        args: &BTreeMap<String, Value>,
        _timeout: Duration,
    ) -> Result<Value, BackendError> {
        let w = &self.world;
        Ok(match function {
            "GROUNDING" => Value::Interval(ground_in_video(w, video_arg(args, "video")?, text_arg(args, "query")?)?),
            "VQA" => Value::Text(mock_vqa(w, video_arg(args, "video")?, text_arg(args, "question")?)?),
            "TRACK" => Value::Region(mock_track(w, video_arg(args, "video")?, text_arg(args, "object")?)?),
            "POSE" => Value::PoseSequence(mock_pose(w, video_arg(args, "video")?)?),
            "CLASSIFYPOSE" => Value::Text(mock_classifypose(poses_arg(args, "poses")?, text_arg(args, "labels")?)?),
            other => return Err(BackendError::Unsupported(other.to_owned())),
        })
    }
}

/// Pure functions on [`PureBackend`], model-backed ones on the world mocks.
pub fn standard_bindings(world: Arc<World>) -> Bindings {
    Bindings::new()
        .bind(PURE_FUNCTIONS.iter().copied(), Arc::new(PureBackend))
        .bind(MODEL_FUNCTIONS.iter().copied(), Arc::new(MockWorldBackend::new(world)))
}

#[cfg(test)]
mod tests;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::pose::PoseLabel;
use crate::interpreter::{Region, VideoRef};

/// Ground truth for one synthetic video (`*.vworld.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoDescriptor {
    pub id: String,
    pub duration_s: f64,
    pub fps: f64,
    #[serde(default)]
    pub events: Vec<Event>,
    #[serde(default)]
    pub objects: Vec<ObjectTrack>,
    #[serde(default)]
    pub qa_facts: Vec<QaFact>,
    /// Actor → pose keyframes, in increasing time.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub poses: BTreeMap<String, Vec<PoseKey>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub label: String,
    pub start_s: f64,
    pub end_s: f64,
    #[serde(default)]
    pub actor: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectTrack {
    pub name: String,
    pub region: Region,
    pub start_s: f64,
    pub end_s: f64,
}

/// A canned answer for questions containing `question_pattern`. Facts with
/// a time range only apply when the video still covers part of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaFact {
    pub question_pattern: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseKey {
    pub t_s: f64,
    pub label: PoseLabel,
}

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("cannot read descriptor {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed descriptor {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("descriptor '{id}': {reason}")]
    Invalid { id: String, reason: String },
}

impl VideoDescriptor {
    pub fn new(id: impl Into<String>, duration_s: f64) -> Self {
        Self {
            id: id.into(),
            duration_s,
            fps: 30.0,
            events: Vec::new(),
            objects: Vec::new(),
            qa_facts: Vec::new(),
            poses: BTreeMap::new(),
        }
    }

    pub fn with_event(mut self, label: &str, start_s: f64, end_s: f64, actor: &str) -> Self {
        self.events.push(Event {
            label: label.to_owned(),
            start_s,
            end_s,
            actor: actor.to_owned(),
        });
        self
    }

    pub fn load(path: &Path) -> Result<Self, DescriptorError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| DescriptorError::Io {
            path: shown.clone(),
            source,
        })?;
        let d: Self = serde_json::from_str(&text)
            .map_err(|source| DescriptorError::Json { path: shown, source })?;
        d.validate()?;
        Ok(d)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("descriptor serializes");
        std::fs::write(path, text + "\n")
    }

    pub fn input_video(&self) -> VideoRef {
        VideoRef::full(self.id.clone(), self.duration_s)
    }

    pub fn validate(&self) -> Result<(), DescriptorError> {
        let fail = |reason: String| {
            Err(DescriptorError::Invalid {
                id: self.id.clone(),
                reason,
            })
        };
        if self.id.is_empty() {
            return fail("id is empty".into());
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return fail(format!("duration_s must be positive, got {}", self.duration_s));
        }
        if !(self.fps > 0.0) {
            return fail(format!("fps must be positive, got {}", self.fps));
        }
        let in_range = |a: f64, b: f64| 0.0 <= a && a <= b && b <= self.duration_s;
        for e in &self.events {
            if e.label.trim().is_empty() {
                return fail("event with empty label".into());
            }
            if !in_range(e.start_s, e.end_s) {
                return fail(format!(
                    "event '{}' [{}, {}] is outside [0, {}]",
                    e.label, e.start_s, e.end_s, self.duration_s
                ));
            }
        }
        for o in &self.objects {
            if !in_range(o.start_s, o.end_s) {
                return fail(format!("object '{}' has an invalid time span", o.name));
            }
            let r = o.region;
            if ![r.x, r.y, r.w, r.h].iter().all(|v| (0.0..=1.0).contains(v)) {
                return fail(format!("object '{}' region is not normalized", o.name));
            }
        }
        for q in &self.qa_facts {
            if let (Some(a), Some(b)) = (q.start_s, q.end_s) {
                if !in_range(a, b) {
                    return fail(format!("qa fact '{}' has an invalid time span", q.question_pattern));
                }
            }
        }
        for (actor, keys) in &self.poses {
            if keys.windows(2).any(|w| w[0].t_s >= w[1].t_s) {
                return fail(format!("pose keys for '{actor}' are not strictly increasing"));
            }
            if keys.iter().any(|k| k.t_s < 0.0 || k.t_s > self.duration_s) {
                return fail(format!("pose key for '{actor}' is outside the video"));
            }
        }
        Ok(())
    }
}

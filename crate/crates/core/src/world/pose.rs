use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::interpreter::PoseFrame;

/// COCO keypoint order.
pub const KEYPOINT_NAMES: [&str; 17] = [
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
];

/// RMS distance under which a frame is recognized as a template pose.
pub const MATCH_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoseLabel {
    Standing,
    Sitting,
    Falling,
    Lying,
}

impl PoseLabel {
    pub const ALL: [PoseLabel; 4] = [
        PoseLabel::Standing,
        PoseLabel::Sitting,
        PoseLabel::Falling,
        PoseLabel::Lying,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PoseLabel::Standing => "standing",
            PoseLabel::Sitting => "sitting",
            PoseLabel::Falling => "falling",
            PoseLabel::Lying => "lying",
        }
    }

    /// Canonical keypoints for this pose, all inside the unit square.
    pub fn template(self) -> [[f64; 2]; 17] {
        match self {
            PoseLabel::Standing => STANDING,
            PoseLabel::Sitting => SITTING,
            PoseLabel::Falling => rotate(&STANDING, std::f64::consts::FRAC_PI_4),
            PoseLabel::Lying => rotate(&STANDING, std::f64::consts::FRAC_PI_2),
        }
    }

    pub fn frame(self, t_s: f64) -> PoseFrame {
        let keypoints = KEYPOINT_NAMES
            .iter()
            .zip(self.template())
            .map(|(n, p)| ((*n).to_owned(), p))
            .collect::<BTreeMap<_, _>>();
        PoseFrame { t_s, keypoints }
    }
}

impl fmt::Display for PoseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PoseLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PoseLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown pose label '{s}'"))
    }
}

const STANDING: [[f64; 2]; 17] = [
    [0.50, 0.10],
    [0.48, 0.08],
    [0.52, 0.08],
    [0.46, 0.09],
    [0.54, 0.09],
    [0.42, 0.20],
    [0.58, 0.20],
    [0.40, 0.35],
    [0.60, 0.35],
    [0.40, 0.48],
    [0.60, 0.48],
    [0.45, 0.50],
    [0.55, 0.50],
    [0.45, 0.70],
    [0.55, 0.70],
    [0.45, 0.90],
    [0.55, 0.90],
];

const SITTING: [[f64; 2]; 17] = [
    [0.50, 0.30],
    [0.48, 0.28],
    [0.52, 0.28],
    [0.46, 0.29],
    [0.54, 0.29],
    [0.42, 0.40],
    [0.58, 0.40],
    [0.40, 0.52],
    [0.60, 0.52],
    [0.42, 0.62],
    [0.58, 0.62],
    [0.45, 0.66],
    [0.55, 0.66],
    [0.30, 0.68],
    [0.40, 0.68],
    [0.30, 0.90],
    [0.40, 0.90],
];

fn rotate(points: &[[f64; 2]; 17], angle: f64) -> [[f64; 2]; 17] {
    let (s, c) = angle.sin_cos();
    let mut out = [[0.0; 2]; 17];
    for (o, [x, y]) in out.iter_mut().zip(points) {
        let (dx, dy) = (x - 0.5, y - 0.5);
        *o = [0.5 + dx * c - dy * s, 0.5 + dx * s + dy * c];
    }
    out
}

fn rms_to_template(frame: &PoseFrame, label: PoseLabel) -> Option<f64> {
    let mut sum = 0.0;
    for (name, [tx, ty]) in KEYPOINT_NAMES.iter().zip(label.template()) {
        let [x, y] = frame.keypoints.get(*name)?;
        sum += (x - tx).powi(2) + (y - ty).powi(2);
    }
    Some((sum / KEYPOINT_NAMES.len() as f64).sqrt())
}

/// The template pose a frame matches, if any.
pub fn recognize(frame: &PoseFrame) -> Option<PoseLabel> {
    PoseLabel::ALL
        .into_iter()
        .filter_map(|l| rms_to_template(frame, l).map(|d| (l, d)))
        .filter(|(_, d)| *d < MATCH_TOLERANCE)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(l, _)| l)
}

/// Splits a comma-separated label vocabulary, lowercased and trimmed.
pub fn parse_vocabulary(labels: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for l in labels.split(',').map(|l| l.trim().to_lowercase()) {
        if !l.is_empty() && !out.contains(&l) {
            out.push(l);
        }
    }
    out
}

/// Majority recognized label among those in the vocabulary; ties go to the
/// label listed first. `None` when no frame matches any listed label.
pub fn majority_label(frames: &[PoseFrame], labels: &str) -> Option<String> {
    let vocab = parse_vocabulary(labels);
    let mut counts = vec![0usize; vocab.len()];
    for f in frames {
        if let Some(l) = recognize(f) {
            if let Some(i) = vocab.iter().position(|v| v == l.as_str()) {
                counts[i] += 1;
            }
        }
    }
    let best = counts
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .fold(None::<(usize, usize)>, |acc, (i, c)| match acc {
            Some((_, bc)) if bc >= *c => acc,
            _ => Some((i, *c)),
        })?;
    Some(vocab[best.0].clone())
}

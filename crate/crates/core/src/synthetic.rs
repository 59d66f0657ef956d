//! Seeded synthetic scenarios: "what does the person do before/after X?"
//! questions over descriptors with known answers, matching example sets,
//! and scripted-provider scripts that drive the whole pipeline.
//!
//! Every item's descriptor holds three token-disjoint activities: one
//! before the anchor, the anchor itself at [3, 4], and one after it. The
//! example vocabulary shares no tokens with the item vocabulary, so a
//! scripted provider imitating the nearest example can only key on
//! "before"/"after".

use serde_json::json;

use crate::dsl::quote;
use crate::eval::{EvalItem, EvalSuite};
use crate::generator::{ExampleSet, InContextExample};
use crate::interpreter::Region;
use crate::world::{ObjectTrack, PoseKey, PoseLabel, VideoDescriptor};

const ITEM_VERBS: [&str; 20] = [
    "open", "close", "carry", "throw", "wash", "fold", "push", "pull", "lift", "drop", "paint", "sweep", "clean",
    "hold", "kick", "read", "write", "cut", "fill", "empty",
];
const ITEM_OBJECTS: [&str; 20] = [
    "door", "window", "box", "bag", "cup", "chair", "table", "laptop", "phone", "book", "shelf", "blanket", "broom",
    "sandwich", "bottle", "pillow", "towel", "mirror", "shoe", "jacket",
];
const EXAMPLE_VERBS: [&str; 5] = ["stir", "peel", "pour", "wipe", "tie"];
const EXAMPLE_OBJECTS: [&str; 4] = ["pot", "orange", "kettle", "rope"];

/// Number of distinct item anchors available.
pub const MAX_ITEMS: usize = ITEM_VERBS.len() * ITEM_OBJECTS.len();

pub const VQA_QUESTION: &str = "what does the person do";
pub const VIDEO_DURATION_S: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Before,
    After,
}

impl Direction {
    pub fn word(self) -> &'static str {
        match self {
            Direction::Before => "before",
            Direction::After => "after",
        }
    }

    pub fn trim_function(self) -> &'static str {
        match self {
            Direction::Before => "TRIMBEFORE",
            Direction::After => "TRIMAFTER",
        }
    }
}

pub fn instruction(direction: Direction, phrase: &str) -> String {
    format!("What does the person do {} {phrase}?", direction.word())
}

/// The reference decomposition: ground the anchor, trim to one side of it,
/// ask what happens there.
pub fn program_text(trim_function: &str, phrase: &str) -> String {
    format!(
        "ANS0=GROUNDING(video=VIDEO,query={})\nANS1={trim_function}(video=VIDEO,interval=ANS0)\nFINAL=VQA(video=ANS1,question={})",
        quote(phrase),
        quote(VQA_QUESTION)
    )
}

fn item_phrase(verb: usize, object: usize) -> String {
    format!("{} {}", ITEM_VERBS[verb % 20], ITEM_OBJECTS[object % 20])
}

/// Direction of item `i`: every fourth item asks about what came before.
pub fn item_direction(i: usize) -> Direction {
    if i % 4 == 3 {
        Direction::Before
    } else {
        Direction::After
    }
}

pub struct ItemScene {
    pub anchor: String,
    pub before: String,
    pub after: String,
    pub direction: Direction,
}

/// Scene `i`; the three phrases share no token.
pub fn item_scene(i: usize) -> ItemScene {
    assert!(i < MAX_ITEMS, "only {MAX_ITEMS} distinct scenes");
    let (v, o) = (i / 20, i % 20);
    ItemScene {
        anchor: item_phrase(v, o),
        before: item_phrase(v + 13, o + 5),
        after: item_phrase(v + 7, o + 11),
        direction: item_direction(i),
    }
}

pub fn item_descriptor(i: usize) -> VideoDescriptor {
    let s = item_scene(i);
    VideoDescriptor::new(format!("vid{i:03}"), VIDEO_DURATION_S)
        .with_event(&s.before, 0.5, 2.5, "person")
        .with_event(&s.anchor, 3.0, 4.0, "person")
        .with_event(&s.after, 5.0, 8.0, "person")
}

pub fn item_instructions(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            let s = item_scene(i);
            instruction(s.direction, &s.anchor)
        })
        .collect()
}

/// `n` items over their own descriptors. With `multiple_choice`, each item
/// lists the three activities of its scene, rotated by item index.
pub fn eval_suite(n: usize, multiple_choice: bool) -> EvalSuite {
    let mut items = Vec::with_capacity(n);
    let mut descriptors = Vec::with_capacity(n);
    for i in 0..n {
        let s = item_scene(i);
        let answer = match s.direction {
            Direction::Before => s.before.clone(),
            Direction::After => s.after.clone(),
        };
        let options = multiple_choice.then(|| {
            let mut o = vec![s.before.clone(), s.anchor.clone(), s.after.clone()];
            o.rotate_left(i % 3);
            o
        });
        let d = item_descriptor(i);
        items.push(EvalItem {
            id: format!("item{i:03}"),
            descriptor: format!("{}.vworld.json", d.id),
            question: instruction(s.direction, &s.anchor),
            options,
            answer,
        });
        descriptors.push(d);
    }
    EvalSuite::from_parts(items, descriptors).expect("synthetic suite is consistent")
}

/// 20 examples, every fourth asking about what came before. With
/// `planted_flaw`, those five trim the wrong side of the anchor.
pub fn example_set(planted_flaw: bool) -> ExampleSet {
    let mut examples = Vec::with_capacity(20);
    for i in 0..20 {
        let phrase = format!("{} {}", EXAMPLE_VERBS[i / 4], EXAMPLE_OBJECTS[i % 4]);
        let direction = item_direction(i);
        let trim = if planted_flaw { Direction::After } else { direction }.trim_function();
        examples.push(InContextExample::new(
            format!("ex{:02}", i + 1),
            instruction(direction, &phrase),
            program_text(trim, &phrase),
        ));
    }
    ExampleSet::new(examples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeBehavior {
    /// Adopt the context-free program.
    TakeContextFree,
    /// Keep the contextual program: refinement is a fixed point.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptOptions {
    pub seed: u64,
    /// `(rate, max_faults)` for generation-time fault injection.
    pub inject: Option<(f64, usize)>,
    pub merge: MergeBehavior,
    /// Corrections echo the faulty program instead of fixing it.
    pub hostile_correction: bool,
}

impl Default for ScriptOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            inject: None,
            merge: MergeBehavior::TakeContextFree,
            hostile_correction: false,
        }
    }
}

const EVENT_PATTERN: &str = r"(?:before|after) (?P<event>.+)\?$";

/// Script for the synthetic scenarios: generation imitates the nearest
/// example, context-free generation applies the right decomposition,
/// corrections apply one suggested fix per call.
pub fn script_json(opts: ScriptOptions) -> String {
    let mut generate = json!({
        "name": "imitate nearest example",
        "stage": "generate",
        "match": {"regex": EVENT_PATTERN},
        "target": "instruction",
        "response": {"action": "imitate", "slots": {"query": "{event}"}}
    });
    if let Some((rate, max_faults)) = opts.inject {
        generate["inject"] = json!({"rate": rate, "max_faults": max_faults});
    }
    let context_free = |d: Direction| {
        json!({
            "name": format!("decompose {}", d.word()),
            "stage": "context_free",
            "match": {"regex": format!(r"{} (?P<event>.+)\?$", d.word())},
            "target": "instruction",
            "response": {"action": "template", "program": program_text(d.trim_function(), "{event}")}
        })
    };
    let correct = if opts.hostile_correction {
        json!({"action": "echo_previous"})
    } else {
        json!({"action": "fix_flagged", "per_call": 1})
    };
    let merge = match opts.merge {
        MergeBehavior::TakeContextFree => "pick_b",
        MergeBehavior::Identity => "pick_a",
    };
    let doc = json!({
        "seed": opts.seed,
        "rules": [
            generate,
            context_free(Direction::Before),
            context_free(Direction::After),
            {"name": "correct", "stage": "correct", "response": correct},
            {"name": "merge", "stage": "merge", "response": {"action": merge}},
            {"name": "judge", "stage": "judge", "response": "yes"}
        ]
    });
    serde_json::to_string_pretty(&doc).expect("script serializes")
}

pub const GOLDEN_INSTRUCTION: &str = "What does the man do after entering the room?";

pub const GOLDEN_PROGRAM: &str = "ANS0=GROUNDING(video=VIDEO,query='man enters room')\n\
ANS1=TRIMAFTER(video=VIDEO,interval=ANS0)\n\
FINAL=VQA(video=ANS1,question='what does the man do')";

/// The bathroom scene: entering at [2, 3.5], then picking up a towel.
pub fn golden_descriptor() -> VideoDescriptor {
    VideoDescriptor::new("bathroom", VIDEO_DURATION_S)
        .with_event("enter room", 2.0, 3.5, "man")
        .with_event("pick up towel", 4.0, 6.0, "man")
        .with_event("dry face", 6.5, 7.5, "man")
}

pub fn golden_examples() -> ExampleSet {
    ExampleSet::new(vec![
        InContextExample::new(
            "after-door",
            "What does the woman do after opening the door?",
            "ANS0=GROUNDING(video=VIDEO,query='woman opens door')\nANS1=TRIMAFTER(video=VIDEO,interval=ANS0)\nFINAL=VQA(video=ANS1,question='what does the woman do')",
        ),
        InContextExample::new(
            "merge-two",
            "Merge the two videos.",
            "OUT0=MERGE(video0=VIDEO0,video1=VIDEO1)",
        ),
    ])
}

/// Answers the golden instruction with the reference program and fixes one
/// flagged function per correction.
pub fn golden_script_json() -> String {
    let doc = json!({"rules": [
        {"name": "golden", "stage": "generate", "match": {"contains": "after entering the room"}, "target": "instruction",
         "response": format!("Here is the program:\n```\n{GOLDEN_PROGRAM}\n```")},
        {"name": "merge videos", "stage": "generate", "match": {"contains": "the two videos"}, "target": "instruction",
         "response": "OUT0=MERGE(video0=VIDEO0,video1=VIDEO1)"},
        {"name": "correct", "stage": "correct", "response": {"action": "fix_flagged", "per_call": 1}}
    ]});
    serde_json::to_string_pretty(&doc).expect("script serializes")
}

/// Two people side by side for 7 s: the "old man" on the left falls at
/// t = 3, the "nurse" on the right keeps standing.
pub fn fall_descriptor() -> VideoDescriptor {
    let mut d = VideoDescriptor::new("ward", 8.0);
    for (name, x) in [("old man", 0.0), ("nurse", 0.5)] {
        d.objects.push(ObjectTrack {
            name: name.into(),
            region: Region::new(x, 0.0, 0.5, 1.0),
            start_s: 0.0,
            end_s: 8.0,
        });
    }
    let keys = |labels: &[PoseLabel]| {
        labels
            .iter()
            .enumerate()
            .map(|(i, &label)| PoseKey { t_s: i as f64, label })
            .collect::<Vec<_>>()
    };
    use PoseLabel::{Falling, Standing};
    d.poses.insert(
        "old man".into(),
        keys(&[Standing, Standing, Standing, Falling, Falling, Falling, Falling]),
    );
    d.poses.insert("nurse".into(), keys(&[Standing; 7]));
    d.with_event("old man falls", 3.0, 4.0, "old man")
}

/// Track a person, crop to them, estimate poses, classify.
pub fn fall_program(person: &str) -> String {
    format!(
        "BOX=TRACK(video=VIDEO,object={})\nPERSON=CROP(video=VIDEO,region=BOX)\nPOSES=POSE(video=PERSON)\nFINAL=CLASSIFYPOSE(poses=POSES,labels='falling,standing,sitting')",
        quote(person)
    )
}

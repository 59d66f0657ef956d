//! Catalog of callable functions and the semantic types they exchange.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SemType {
    Video,
    Interval,
    Region,
    PoseSequence,
    Text,
    Number,
    Bool,
    Any,
}

impl SemType {
    /// `Any` unifies with everything; other types only with themselves.
    pub fn unifies(self, other: SemType) -> bool {
        self == SemType::Any || other == SemType::Any || self == other
    }
}

impl fmt::Display for SemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: SemType,
    #[serde(default = "default_required")]
    pub required: bool,
}

fn default_required() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionSignature {
    pub name: String,
    pub params: Vec<Param>,
    pub returns: SemType,
    pub usage: String,
}

impl Param {
    pub fn required(name: &str, ty: SemType) -> Self {
        Self {
            name: name.to_owned(),
            ty,
            required: true,
        }
    }

    pub fn optional(name: &str, ty: SemType) -> Self {
        Self {
            name: name.to_owned(),
            ty,
            required: false,
        }
    }
}

impl FunctionSignature {
    pub fn new(name: &str, params: Vec<Param>, returns: SemType, usage: &str) -> Self {
        Self {
            name: name.to_owned(),
            params,
            returns,
            usage: usage.to_owned(),
        }
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Same name, parameters and return type. Usage text is documentation
    /// and does not take part in the comparison.
    pub fn same_shape(&self, other: &FunctionSignature) -> bool {
        self.name == other.name && self.params == other.params && self.returns == other.returns
    }

    /// `NAME(param: Type, ...) -> Type -- usage`; optional params carry a `?`.
    pub fn usage_line(&self) -> String {
        let params = self
            .params
            .iter()
            .map(|p| {
                let opt = if p.required { "" } else { "?" };
                format!("{}{}: {}", p.name, opt, p.ty)
            })
            .collect::<Vec<_>>()
            .join(", ");
        format!("{}({}) -> {} -- {}", self.name, params, self.returns, self.usage)
    }

    fn check(&self) -> Result<(), RegistryError> {
        let invalid = |reason: String| RegistryError::Invalid {
            name: self.name.clone(),
            reason,
        };
        if !crate::dsl::is_identifier(&self.name) {
            return Err(invalid("name is not an identifier".into()));
        }
        if self.usage.trim().is_empty() {
            return Err(invalid("usage text is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for p in &self.params {
            if !crate::dsl::is_identifier(&p.name) {
                return Err(invalid(format!("parameter '{}' is not an identifier", p.name)));
            }
            if !seen.insert(p.name.as_str()) {
                return Err(invalid(format!("parameter '{}' declared twice", p.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("function '{0}' is already defined with a different signature")]
    Conflict(String),
    #[error("function '{0}' is defined more than once")]
    Duplicate(String),
    #[error("invalid signature for '{name}': {reason}")]
    Invalid { name: String, reason: String },
    #[error("cannot read registry extension {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed registry extension {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Immutable name → signature map. Lookup is case-sensitive; iteration is
/// alphabetical.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    functions: BTreeMap<String, FunctionSignature>,
}

/// On-disk form of a registry extension (also the remote manifest shape).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RegistryDocument {
    pub functions: Vec<FunctionSignature>,
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_signatures(
        signatures: impl IntoIterator<Item = FunctionSignature>,
    ) -> Result<Self, RegistryError> {
        let mut functions = BTreeMap::new();
        for sig in signatures {
            sig.check()?;
            if functions.contains_key(&sig.name) {
                return Err(RegistryError::Duplicate(sig.name));
            }
            functions.insert(sig.name.clone(), sig);
        }
        Ok(Self { functions })
    }

    pub fn from_json(text: &str) -> Result<Self, RegistryError> {
        let doc: RegistryDocument =
            serde_json::from_str(text).map_err(|source| RegistryError::Json {
                path: "<inline>".into(),
                source,
            })?;
        Self::from_signatures(doc.functions)
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
            path: shown.clone(),
            source,
        })?;
        let doc: RegistryDocument = serde_json::from_str(&text)
            .map_err(|source| RegistryError::Json { path: shown, source })?;
        Self::from_signatures(doc.functions)
    }

    pub fn to_document(&self) -> RegistryDocument {
        RegistryDocument {
            functions: self.functions.values().cloned().collect(),
        }
    }

    pub fn lookup(&self, name: &str) -> Option<&FunctionSignature> {
        self.functions.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.functions.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.functions.keys().map(String::as_str)
    }

    pub fn signatures(&self) -> impl Iterator<Item = &FunctionSignature> {
        self.functions.values()
    }

    /// Union of both catalogs. An extension may repeat a base entry with the
    /// same shape but never redefine it.
    pub fn merge(&self, extension: &Registry) -> Result<Registry, RegistryError> {
        let mut functions = self.functions.clone();
        for (name, sig) in &extension.functions {
            match functions.get(name) {
                Some(existing) if !existing.same_shape(sig) => {
                    return Err(RegistryError::Conflict(name.clone()))
                }
                Some(_) => {}
                None => {
                    functions.insert(name.clone(), sig.clone());
                }
            }
        }
        Ok(Registry { functions })
    }

    /// One `usage_line` per function, alphabetical, newline separated.
    pub fn usage_block(&self) -> String {
        self.functions
            .values()
            .map(FunctionSignature::usage_line)
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Functions the builtin catalog binds to pure span-algebra executors.
pub const PURE_FUNCTIONS: &[&str] = &[
    "TRIM",
    "TRIMAFTER",
    "TRIMBEFORE",
    "MERGE",
    "CROP",
    "BGBLUR",
    "COLORPOP",
];

/// Functions that need a perception model (mocked by the world backend).
pub const MODEL_FUNCTIONS: &[&str] = &["GROUNDING", "VQA", "TRACK", "POSE", "CLASSIFYPOSE"];

pub fn builtin_catalog() -> Registry {
    use SemType::*;
    let req = Param::required;
    let sigs = vec![
        FunctionSignature::new(
            "GROUNDING",
            vec![req("video", Video), req("query", Text)],
            Interval,
            "find the time interval in which the described event happens",
        ),
        FunctionSignature::new(
            "TRIMAFTER",
            vec![req("video", Video), req("interval", Interval)],
            Video,
            "keep only the part of the video after the interval ends",
        ),
        FunctionSignature::new(
            "TRIMBEFORE",
            vec![req("video", Video), req("interval", Interval)],
            Video,
            "keep only the part of the video before the interval starts",
        ),
        FunctionSignature::new(
            "TRIM",
            vec![req("video", Video), req("start", Number), req("end", Number)],
            Video,
            "keep the part of the video between start and end seconds",
        ),
        FunctionSignature::new(
            "MERGE",
            vec![req("video0", Video), req("video1", Video)],
            Video,
            "play video0 followed by video1",
        ),
        FunctionSignature::new(
            "CROP",
            vec![req("video", Video), req("region", Region)],
            Video,
            "crop every frame to the given normalized region",
        ),
        FunctionSignature::new(
            "BGBLUR",
            vec![req("video", Video), req("object", Text)],
            Video,
            "blur everything except the named object",
        ),
        FunctionSignature::new(
            "COLORPOP",
            vec![req("video", Video), req("object", Text)],
            Video,
            "keep the named object in color and turn the rest grayscale",
        ),
        FunctionSignature::new(
            "VQA",
            vec![req("video", Video), req("question", Text)],
            Text,
            "answer a question about what happens in the video",
        ),
        FunctionSignature::new(
            "TRACK",
            vec![req("video", Video), req("object", Text)],
            Region,
            "track the named object and return its normalized bounding region",
        ),
        FunctionSignature::new(
            "POSE",
            vec![req("video", Video)],
            PoseSequence,
            "estimate body keypoints for the person in every frame",
        ),
        FunctionSignature::new(
            "CLASSIFYPOSE",
            vec![req("poses", PoseSequence), req("labels", Text)],
            Text,
            "classify a pose sequence into one of the comma-separated labels",
        ),
    ];
    Registry::from_signatures(sigs).expect("builtin catalog is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn falldetect() -> Registry {
        Registry::from_signatures([FunctionSignature::new(
            "FALLDETECT",
            vec![Param::required("video", SemType::Video)],
            SemType::Text,
            "report whether someone falls",
        )])
        .unwrap()
    }

    #[test]
    fn builtin_lookup() {
        let reg = builtin_catalog();
        assert_eq!(reg.len(), 12);
        let sig = reg.lookup("TRIMAFTER").unwrap();
        let params: Vec<_> = sig.params.iter().map(|p| (p.name.as_str(), p.ty)).collect();
        assert_eq!(
            params,
            [("video", SemType::Video), ("interval", SemType::Interval)]
        );
        assert!(reg.lookup("FOOBAR").is_none());
        assert!(reg.lookup("trimafter").is_none());
        for name in [
            "GROUNDING", "TRIMAFTER", "VQA", "MERGE", "CROP", "TRIM", "BGBLUR", "COLORPOP",
        ] {
            assert!(reg.contains(name), "{name}");
        }
        let bound: BTreeSet<_> = PURE_FUNCTIONS.iter().chain(MODEL_FUNCTIONS).copied().collect();
        assert_eq!(bound, reg.names().collect());
    }

    #[test]
    fn merge_rules() {
        let base = builtin_catalog();
        assert_eq!(base.merge(&falldetect()).unwrap().len(), 13);
        assert_eq!(base.merge(&base).unwrap(), base);
        assert_eq!(base.merge(&Registry::empty()).unwrap(), base);
        assert_eq!(Registry::empty().merge(&base).unwrap(), base);

        let bad = Registry::from_signatures([FunctionSignature::new(
            "VQA",
            vec![Param::required("video", SemType::Video)],
            SemType::Number,
            "count things",
        )])
        .unwrap();
        match base.merge(&bad) {
            Err(RegistryError::Conflict(name)) => assert_eq!(name, "VQA"),
            other => panic!("expected conflict, got {other:?}"),
        }
    }

    #[test]
    fn merge_is_associative() {
        let a = builtin_catalog();
        let b = falldetect();
        let c = Registry::from_signatures([FunctionSignature::new(
            "COUNT",
            vec![Param::required("video", SemType::Video), Param::optional("object", SemType::Text)],
            SemType::Number,
            "count objects",
        )])
        .unwrap();
        let left = a.merge(&b).unwrap().merge(&c).unwrap();
        let right = a.merge(&b.merge(&c).unwrap()).unwrap();
        assert_eq!(left, right);
    }

    #[test]
    fn usage_block_format() {
        let reg = builtin_catalog();
        let block = reg.usage_block();
        let lines: Vec<_> = block.lines().collect();
        assert_eq!(lines.len(), 12);
        assert!(lines[0].starts_with("BGBLUR("));
        assert_eq!(
            lines[0],
            "BGBLUR(video: Video, object: Text) -> Video -- blur everything except the named object"
        );
        let mut sorted = lines.clone();
        sorted.sort();
        assert_eq!(sorted, lines);
        assert_eq!(block, builtin_catalog().usage_block());
        assert_eq!(Registry::empty().usage_block(), "");
        assert_eq!(reg.merge(&falldetect()).unwrap().usage_block().lines().count(), 13);
    }

    #[test]
    fn extension_document() {
        let json = r#"{"functions":[{"name":"FALLDETECT","params":[{"name":"video","type":"Video"}],"returns":"Text","usage":"report falls"}]}"#;
        let reg = Registry::from_json(json).unwrap();
        assert!(reg.lookup("FALLDETECT").unwrap().params[0].required);
        let round = serde_json::to_string(&reg.to_document()).unwrap();
        assert_eq!(Registry::from_json(&round).unwrap(), reg);

        let dup_param = r#"{"functions":[{"name":"X","params":[{"name":"a","type":"Text"},{"name":"a","type":"Text"}],"returns":"Text","usage":"u"}]}"#;
        assert!(matches!(Registry::from_json(dup_param), Err(RegistryError::Invalid { .. })));
        let no_usage = r#"{"functions":[{"name":"X","params":[],"returns":"Text","usage":" "}]}"#;
        assert!(matches!(Registry::from_json(no_usage), Err(RegistryError::Invalid { .. })));
        let twice = r#"{"functions":[{"name":"X","params":[],"returns":"Text","usage":"u"},{"name":"X","params":[],"returns":"Text","usage":"u"}]}"#;
        assert!(matches!(Registry::from_json(twice), Err(RegistryError::Duplicate(_))));
        assert!(matches!(Registry::from_json("{"), Err(RegistryError::Json { .. })));
    }

    #[test]
    fn any_unifies() {
        assert!(SemType::Any.unifies(SemType::Video));
        assert!(SemType::Text.unifies(SemType::Any));
        assert!(SemType::Text.unifies(SemType::Text));
        assert!(!SemType::Text.unifies(SemType::Number));
    }
}

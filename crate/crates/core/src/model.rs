//! System model, ordinal scale, scenario and the JSON document format.
//!
//! A document is parsed in two steps: the raw JSON is deserialized into plain
//! data types (syntax errors stop here), then [`validate`] lists every
//! invariant violation. [`parse_model`] fails on the first violation, while
//! the `validate` subcommand reports all of them.

use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::reveal::StructureSpec;
use crate::stream::TrackConfig;

/// Ordinal health level. `1` is the worst state ("out of service").
pub type Level = u8;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

id_type!(
    /// A system component (graph vertex).
    ComponentId
);
id_type!(
    /// A system function: a set of components used together.
    FunctionId
);
id_type!(
    /// A cluster of functions executed at the same time moment.
    ClusterId
);

pub const DEFAULT_LEVELS: Level = 4;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrdinalScale {
    pub levels: Level,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<Level, String>,
}

impl OrdinalScale {
    pub fn new(levels: Level) -> Self {
        Self {
            levels,
            labels: BTreeMap::new(),
        }
    }

    pub fn contains(&self, level: Level) -> bool {
        (1..=self.levels).contains(&level)
    }

    pub fn worst(&self) -> Level {
        1
    }

    pub fn best(&self) -> Level {
        self.levels
    }
}

impl Default for OrdinalScale {
    fn default() -> Self {
        Self::new(DEFAULT_LEVELS)
    }
}

/// Components, functions and function clusters. Iteration order everywhere is
/// declaration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemModel {
    pub scale: OrdinalScale,
    pub components: Vec<ComponentId>,
    pub functions: IndexMap<FunctionId, Vec<ComponentId>>,
    pub clusters: IndexMap<ClusterId, Vec<FunctionId>>,
}

impl SystemModel {
    pub fn component_index(&self, id: &str) -> Option<usize> {
        self.components.iter().position(|c| c.as_str() == id)
    }

    pub fn function(&self, id: &str) -> Result<&[ComponentId], ModelError> {
        self.functions
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| ModelError::UnknownFunction(id.to_owned()))
    }

    pub fn cluster(&self, id: &str) -> Result<&[FunctionId], ModelError> {
        self.clusters
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| ModelError::UnknownCluster(id.to_owned()))
    }
}

/// Component colors at one time moment.
///
/// `overrides` holds per-(component, function) unit-test results that differ
/// from the component's global state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StateAssignment {
    pub global: IndexMap<ComponentId, Level>,
    pub overrides: BTreeMap<(ComponentId, FunctionId), Level>,
}

impl StateAssignment {
    pub fn from_global<I, C>(levels: I) -> Self
    where
        I: IntoIterator<Item = (C, Level)>,
        C: Into<ComponentId>,
    {
        Self {
            global: levels.into_iter().map(|(c, l)| (c.into(), l)).collect(),
            overrides: BTreeMap::new(),
        }
    }

    /// Color of `component` inside `function`: the override if present,
    /// otherwise the global state.
    pub fn level_for(&self, component: &ComponentId, function: &FunctionId) -> Option<Level> {
        self.overrides
            .get(&(component.clone(), function.clone()))
            .or_else(|| self.global.get(component))
            .copied()
    }
}

/// One per-tick override record of the scenario.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Override {
    pub tick: usize,
    pub component: ComponentId,
    pub function: FunctionId,
    pub level: Level,
}

/// A chain scenario over the discrete time axis `0..ticks`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub ticks: usize,
    /// Active cluster per tick; `None` means idle.
    pub chain: Vec<Option<ClusterId>>,
    pub states: IndexMap<ComponentId, Vec<Level>>,
    pub overrides: Vec<Override>,
}

impl Scenario {
    /// The state assignment for one tick (state column plus that tick's
    /// overrides).
    pub fn states_at(&self, tick: usize) -> Option<StateAssignment> {
        if tick >= self.ticks {
            return None;
        }
        let global = self
            .states
            .iter()
            .filter_map(|(c, s)| s.get(tick).map(|&l| (c.clone(), l)))
            .collect();
        let overrides = self
            .overrides
            .iter()
            .filter(|o| o.tick == tick)
            .map(|o| ((o.component.clone(), o.function.clone()), o.level))
            .collect();
        Some(StateAssignment { global, overrides })
    }
}

/// A parsed input document.
#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub model: SystemModel,
    pub scenario: Option<Scenario>,
    pub detection: Option<StructureSpec>,
    pub track: Option<TrackConfig>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scale: {0}")]
    InvalidScale(String),
    #[error("unknown component id `{0}`")]
    UnknownComponent(String),
    #[error("unknown function id `{0}`")]
    UnknownFunction(String),
    #[error("unknown cluster id `{0}`")]
    UnknownCluster(String),
    #[error("level out of range: {0}")]
    LevelOutOfRange(String),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("empty set: {0}")]
    Empty(String),
    #[error("duplicate id `{0}`")]
    Duplicate(String),
    #[error("missing state: {0}")]
    MissingState(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl ModelError {
    /// Stable short error code.
    pub fn code(&self) -> &'static str {
        match self {
            Self::Syntax { .. } => "E_SYNTAX",
            Self::InvalidScale(_) => "E_SCALE",
            Self::UnknownComponent(_) => "E_UNKNOWN_COMPONENT",
            Self::UnknownFunction(_) => "E_UNKNOWN_FUNCTION",
            Self::UnknownCluster(_) => "E_UNKNOWN_CLUSTER",
            Self::LevelOutOfRange(_) => "E_LEVEL_RANGE",
            Self::LengthMismatch(_) => "E_LENGTH",
            Self::Empty(_) => "E_EMPTY",
            Self::Duplicate(_) => "E_DUPLICATE",
            Self::MissingState(_) => "E_MISSING_STATE",
            Self::InvalidConfig(_) => "E_CONFIG",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    InvalidScale,
    UnknownComponent,
    UnknownFunction,
    UnknownCluster,
    LevelOutOfRange,
    StreamLength,
    ChainLength,
    EmptySet,
    Duplicate,
    MissingState,
    InvalidConfig,
}

/// One invariant violation, naming the offending entity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub entity: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.message)
    }
}

impl From<Violation> for ModelError {
    fn from(v: Violation) -> Self {
        let text = v.to_string();
        match v.kind {
            ViolationKind::InvalidScale => Self::InvalidScale(text),
            ViolationKind::UnknownComponent => Self::UnknownComponent(v.message_id()),
            ViolationKind::UnknownFunction => Self::UnknownFunction(v.message_id()),
            ViolationKind::UnknownCluster => Self::UnknownCluster(v.message_id()),
            ViolationKind::LevelOutOfRange => Self::LevelOutOfRange(text),
            ViolationKind::StreamLength | ViolationKind::ChainLength => Self::LengthMismatch(text),
            ViolationKind::EmptySet => Self::Empty(text),
            ViolationKind::Duplicate => Self::Duplicate(v.message_id()),
            ViolationKind::MissingState => Self::MissingState(text),
            ViolationKind::InvalidConfig => Self::InvalidConfig(text),
        }
    }
}

impl Violation {
    fn new(kind: ViolationKind, entity: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            kind,
            entity: entity.into(),
            message: message.into(),
        }
    }

    // Reference violations carry the unknown id between backticks.
    fn message_id(&self) -> String {
        self.message
            .split('`')
            .nth(1)
            .unwrap_or(&self.message)
            .to_owned()
    }
}

/// Checks every model and scenario invariant. An empty list means the pair is
/// valid.
pub fn validate(model: &SystemModel, scenario: Option<&Scenario>) -> Vec<Violation> {
    use ViolationKind as K;
    let mut out = Vec::new();

    if model.scale.levels < 2 {
        out.push(Violation::new(
            K::InvalidScale,
            "scale",
            format!("levels must be >= 2, got {}", model.scale.levels),
        ));
    }
    for &label in model.scale.labels.keys() {
        if !model.scale.contains(label) {
            out.push(Violation::new(
                K::LevelOutOfRange,
                "scale.labels",
                format!("label for level {label} outside 1..={}", model.scale.levels),
            ));
        }
    }
    if model.components.is_empty() {
        out.push(Violation::new(K::EmptySet, "components", "no components"));
    }
    let mut seen = std::collections::HashSet::new();
    for c in &model.components {
        if c.as_str().is_empty() {
            out.push(Violation::new(K::EmptySet, "components", "empty component id"));
        }
        if !seen.insert(c.as_str()) {
            out.push(Violation::new(
                K::Duplicate,
                format!("component {c}"),
                format!("duplicate component `{c}`"),
            ));
        }
    }
    for (f, comps) in &model.functions {
        if comps.is_empty() {
            out.push(Violation::new(K::EmptySet, format!("function {f}"), "no components"));
        }
        for c in comps {
            if model.component_index(c.as_str()).is_none() {
                out.push(Violation::new(
                    K::UnknownComponent,
                    format!("function {f}"),
                    format!("unknown component id `{c}`"),
                ));
            }
        }
    }
    for (r, funcs) in &model.clusters {
        if funcs.is_empty() {
            out.push(Violation::new(K::EmptySet, format!("cluster {r}"), "no functions"));
        }
        for f in funcs {
            if !model.functions.contains_key(f) {
                out.push(Violation::new(
                    K::UnknownFunction,
                    format!("cluster {r}"),
                    format!("unknown function id `{f}`"),
                ));
            }
        }
    }

    if let Some(sc) = scenario {
        validate_scenario(model, sc, &mut out);
    }
    out
}

fn validate_scenario(model: &SystemModel, sc: &Scenario, out: &mut Vec<Violation>) {
    use ViolationKind as K;
    if sc.ticks == 0 {
        out.push(Violation::new(K::StreamLength, "scenario.ticks", "ticks must be >= 1"));
    }
    if sc.chain.len() != sc.ticks {
        out.push(Violation::new(
            K::ChainLength,
            "scenario.chain",
            format!("chain length {} != ticks {}", sc.chain.len(), sc.ticks),
        ));
    }
    for (t, entry) in sc.chain.iter().enumerate() {
        if let Some(r) = entry {
            if !model.clusters.contains_key(r) {
                out.push(Violation::new(
                    K::UnknownCluster,
                    format!("scenario.chain[{t}]"),
                    format!("unknown cluster id `{r}`"),
                ));
            }
        }
    }
    for (c, stream) in &sc.states {
        if model.component_index(c.as_str()).is_none() {
            out.push(Violation::new(
                K::UnknownComponent,
                format!("scenario.states.{c}"),
                format!("unknown component id `{c}`"),
            ));
        }
        if stream.len() != sc.ticks {
            out.push(Violation::new(
                K::StreamLength,
                format!("scenario.states.{c}"),
                format!("stream length {} != ticks {}", stream.len(), sc.ticks),
            ));
        }
        if let Some((t, &l)) = stream
            .iter()
            .enumerate()
            .find(|(_, &l)| !model.scale.contains(l))
        {
            out.push(Violation::new(
                K::LevelOutOfRange,
                format!("scenario.states.{c}[{t}]"),
                format!("level {l} outside 1..={}", model.scale.levels),
            ));
        }
    }
    for c in &model.components {
        if !sc.states.contains_key(c) {
            out.push(Violation::new(
                K::MissingState,
                format!("scenario.states.{c}"),
                format!("no state stream for component `{c}`"),
            ));
        }
    }
    for (i, o) in sc.overrides.iter().enumerate() {
        let entity = format!("scenario.overrides[{i}]");
        if o.tick >= sc.ticks {
            out.push(Violation::new(
                K::StreamLength,
                entity.clone(),
                format!("tick {} outside 0..{}", o.tick, sc.ticks),
            ));
        }
        if !model.scale.contains(o.level) {
            out.push(Violation::new(
                K::LevelOutOfRange,
                entity.clone(),
                format!("level {} outside 1..={}", o.level, model.scale.levels),
            ));
        }
        match model.functions.get(&o.function) {
            None => out.push(Violation::new(
                K::UnknownFunction,
                entity,
                format!("unknown function id `{}`", o.function),
            )),
            Some(comps) if !comps.contains(&o.component) => out.push(Violation::new(
                K::UnknownComponent,
                entity,
                format!(
                    "component `{}` is not used by function {}",
                    o.component, o.function
                ),
            )),
            Some(_) => {}
        }
    }
}

/// Union of the component sets of a cluster's functions, in model component
/// order.
pub fn cluster_components(
    model: &SystemModel,
    cluster: &str,
) -> Result<Vec<ComponentId>, ModelError> {
    let funcs = model.cluster(cluster)?;
    let mut member = vec![false; model.components.len()];
    for f in funcs {
        for c in model.function(f.as_str())? {
            let i = model
                .component_index(c.as_str())
                .ok_or_else(|| ModelError::UnknownComponent(c.to_string()))?;
            member[i] = true;
        }
    }
    Ok(model
        .components
        .iter()
        .zip(member)
        .filter(|(_, m)| *m)
        .map(|(c, _)| c.clone())
        .collect())
}

// --- JSON document -------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    #[serde(default)]
    scale: Option<OrdinalScale>,
    components: Vec<ComponentId>,
    functions: IndexMap<FunctionId, Vec<ComponentId>>,
    clusters: IndexMap<ClusterId, Vec<FunctionId>>,
    #[serde(default)]
    scenario: Option<RawScenario>,
    #[serde(default)]
    detection: Option<StructureSpec>,
    #[serde(default)]
    track: Option<TrackConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    ticks: usize,
    chain: Vec<Option<ClusterId>>,
    states: IndexMap<ComponentId, RawStream>,
    #[serde(default)]
    overrides: Vec<Override>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawStream {
    Constant(Level),
    Series(Vec<Level>),
}

/// Parses a document without checking invariants. Only syntax and shape
/// errors are reported.
pub fn parse_document_unchecked(text: &str) -> Result<Document, ModelError> {
    let raw: RawDocument = serde_json::from_str(text).map_err(|e| ModelError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let scenario = raw.scenario.map(|s| Scenario {
        ticks: s.ticks,
        chain: s.chain,
        states: s
            .states
            .into_iter()
            .map(|(c, st)| {
                let levels = match st {
                    RawStream::Constant(l) => vec![l; s.ticks],
                    RawStream::Series(v) => v,
                };
                (c, levels)
            })
            .collect(),
        overrides: s.overrides,
    });
    Ok(Document {
        model: SystemModel {
            scale: raw.scale.unwrap_or_default(),
            components: raw.components,
            functions: raw.functions,
            clusters: raw.clusters,
        },
        scenario,
        detection: raw.detection,
        track: raw.track,
    })
}

/// Violations of the optional detection/track blocks against the model scale.
pub fn validate_config(doc: &Document) -> Vec<Violation> {
    let mut out = Vec::new();
    if let Some(spec) = &doc.detection {
        if let Err(e) = spec.check(doc.model.scale.levels) {
            out.push(Violation::new(ViolationKind::InvalidConfig, "detection", e.to_string()));
        }
    }
    if let Some(cfg) = &doc.track {
        if let Err(e) = cfg.check() {
            out.push(Violation::new(ViolationKind::InvalidConfig, "track", e.to_string()));
        }
    }
    out
}

/// Parses and validates a document.
pub fn parse_model(text: &str) -> Result<Document, ModelError> {
    let doc = parse_document_unchecked(text)?;
    let mut violations = validate(&doc.model, doc.scenario.as_ref());
    violations.extend(validate_config(&doc));
    match violations.into_iter().next() {
        Some(v) => Err(v.into()),
        None => Ok(doc),
    }
}

impl Document {
    /// Canonical JSON form: sorted keys, two-space indent, trailing newline.
    /// Constant state streams are written as a single integer.
    pub fn to_canonical_json(&self) -> String {
        let m = &self.model;
        let mut doc = json!({
            "scale": m.scale,
            "components": m.components,
            "functions": m.functions,
            "clusters": m.clusters,
        });
        let obj = doc.as_object_mut().expect("object literal");
        if let Some(sc) = &self.scenario {
            let states: serde_json::Map<String, Value> = sc
                .states
                .iter()
                .map(|(c, s)| {
                    let v = match s.first() {
                        Some(&first) if s.iter().all(|&l| l == first) => json!(first),
                        _ => json!(s),
                    };
                    (c.to_string(), v)
                })
                .collect();
            let mut scen = json!({
                "ticks": sc.ticks,
                "chain": sc.chain,
                "states": states,
            });
            if !sc.overrides.is_empty() {
                scen["overrides"] = json!(sc.overrides);
            }
            obj.insert("scenario".into(), scen);
        }
        if let Some(d) = &self.detection {
            obj.insert("detection".into(), serde_json::to_value(d).expect("serializable"));
        }
        if let Some(t) = &self.track {
            obj.insert("track".into(), serde_json::to_value(t).expect("serializable"));
        }
        to_pretty(&doc)
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub(crate) fn to_pretty(value: &Value) -> String {
    // serde_json's Map is a BTreeMap without `preserve_order`, so keys come out
    // sorted once the value is round-tripped through `Value`.
    let sorted: Value = serde_json::from_str(&value.to_string()).expect("valid json");
    let mut s = serde_json::to_string_pretty(&sorted).expect("serializable");
    s.push('\n');
    s
}

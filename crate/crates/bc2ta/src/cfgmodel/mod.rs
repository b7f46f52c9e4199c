//! The persistent bytecode control-flow model: a project of classes,
//! methods, instructions and tagged control-flow edges, plus analysis
//! results (loops, timing, grouping) layered onto it.

mod build;
mod persist;
mod stats;

pub use build::{build_project, resolve_invocation_targets};
pub use persist::{load_model, save_model, FORMAT_VERSION};
pub use stats::{compute_stats, StatsReport};

use crate::frontend::InvokeRef;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// Byte offset of an instruction within its method.
pub type Offset = u32;

/// Globally unique method identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MethodId {
    pub class: String,
    pub name: String,
    pub descriptor: String,
}

impl MethodId {
    pub fn new(class: &str, name: &str, descriptor: &str) -> Self {
        MethodId {
            class: class.into(),
            name: name.into(),
            descriptor: descriptor.into(),
        }
    }

    /// Key used in method maps and site-keyed configuration files.
    pub fn signature(&self) -> String {
        format!("{}{}", self.name, self.descriptor)
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}{}", self.class, self.name, self.descriptor)
    }
}

/// Globally unique instruction identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InstrId {
    pub method: MethodId,
    pub offset: Offset,
}

impl fmt::Display for InstrId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.method, self.offset)
    }
}

/// Instruction kind in the model: the raw kinds plus the two synthetic
/// kinds introduced by analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrKind {
    Sequential,
    CondBranch,
    Goto,
    Switch,
    Invoke,
    Return,
    Throw,
    Terminal,
    /// Replacement for a removed direct-recursive call.
    Dummy,
    /// Collapsed straight-line sequence.
    Group,
}

impl From<crate::frontend::InstrKind> for InstrKind {
    fn from(k: crate::frontend::InstrKind) -> Self {
        use crate::frontend::InstrKind as F;
        match k {
            F::Sequential => InstrKind::Sequential,
            F::CondBranch => InstrKind::CondBranch,
            F::Goto => InstrKind::Goto,
            F::Switch => InstrKind::Switch,
            F::Invoke => InstrKind::Invoke,
            F::Return => InstrKind::Return,
            F::Throw => InstrKind::Throw,
            F::Terminal => InstrKind::Terminal,
        }
    }
}

impl InstrKind {
    /// Returns/throws/terminals end the method.
    pub fn is_exit(self) -> bool {
        matches!(self, InstrKind::Return | InstrKind::Throw | InstrKind::Terminal)
    }
}

/// Execution-time bounds of one instruction, in abstract time units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingBounds {
    pub lb: u32,
    pub ub: u32,
}

impl TimingBounds {
    pub fn new(lb: u32, ub: u32) -> Self {
        TimingBounds { lb, ub }
    }
}

/// Edge classification. Loop detection retags edges that participate in a
/// loop; the authoritative per-loop edge sets live in [`LoopInfo`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeTag {
    Fallthrough,
    BranchTaken,
    SwitchCase,
    BackEdge,
    LoopExit,
    LoopContinue,
}

/// Intra-method control-flow edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ControlFlowEdge {
    pub source: Offset,
    pub target: Offset,
    pub tag: EdgeTag,
}

impl ControlFlowEdge {
    pub fn new(source: Offset, target: Offset, tag: EdgeTag) -> Self {
        ControlFlowEdge { source, target, tag }
    }
}

/// One instruction in the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub offset: Offset,
    pub mnemonic: String,
    pub kind: InstrKind,
    pub line: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingBounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invoke_ref: Option<InvokeRef>,
    /// In-project targets of an invoke, deterministically ordered by
    /// class name.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resolved_targets: Vec<MethodId>,
    /// Original offsets collapsed into this node (kind = group only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub group_members: Vec<Offset>,
}

/// Natural loop: head, member set and the edge sets the transformation
/// guards. An edge may appear in sets of several nested loops.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopInfo {
    pub head: Offset,
    pub members: BTreeSet<Offset>,
    pub back_edges: BTreeSet<(Offset, Offset)>,
    pub exit_edges: BTreeSet<(Offset, Offset)>,
    pub continue_edges: BTreeSet<(Offset, Offset)>,
    /// Repetition bound; set by `apply_loop_limits`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<u32>,
}

/// One method body as a control-flow graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodModel {
    pub id: MethodId,
    pub is_static: bool,
    pub is_abstract: bool,
    /// `None` only for bodyless (abstract or native) methods.
    pub entry: Option<Offset>,
    pub exits: BTreeSet<Offset>,
    pub instructions: BTreeMap<Offset, Instruction>,
    pub edges: BTreeSet<ControlFlowEdge>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loops: Vec<LoopInfo>,
}

impl MethodModel {
    pub fn has_body(&self) -> bool {
        self.entry.is_some()
    }

    pub fn successors(&self, offset: Offset) -> impl Iterator<Item = &ControlFlowEdge> {
        self.edges.range(
            ControlFlowEdge::new(offset, 0, EdgeTag::Fallthrough)
                ..=ControlFlowEdge::new(offset, u32::MAX, EdgeTag::LoopContinue),
        )
    }

    pub fn out_degree(&self, offset: Offset) -> usize {
        self.successors(offset).count()
    }

    pub fn predecessors(&self, offset: Offset) -> Vec<Offset> {
        self.edges
            .iter()
            .filter(|e| e.target == offset)
            .map(|e| e.source)
            .collect()
    }
}

/// One class and its methods, keyed by `name+descriptor`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassModel {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub super_name: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interfaces: Vec<String>,
    pub is_interface: bool,
    pub methods: BTreeMap<String, MethodModel>,
}

impl ClassModel {
    pub fn method(&self, name: &str, descriptor: &str) -> Option<&MethodModel> {
        self.methods.get(&format!("{name}{descriptor}"))
    }
}

/// Root of the control-flow model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    pub classes: BTreeMap<String, ClassModel>,
    pub main_class: String,
    /// `(name, descriptor)` of the entry method in `main_class`.
    pub main_method: (String, String),
    pub external_stubs: BTreeSet<String>,
    /// Open store for analysis provenance (stage markers, grouping
    /// summaries); structured results live in their typed fields.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub annotations: BTreeMap<String, serde_json::Value>,
}

impl Project {
    pub fn main_method_id(&self) -> MethodId {
        MethodId::new(&self.main_class, &self.main_method.0, &self.main_method.1)
    }

    pub fn method(&self, id: &MethodId) -> Option<&MethodModel> {
        self.classes
            .get(&id.class)
            .and_then(|c| c.methods.get(&id.signature()))
    }

    pub fn method_mut(&mut self, id: &MethodId) -> Option<&mut MethodModel> {
        self.classes
            .get_mut(&id.class)
            .and_then(|c| c.methods.get_mut(&id.signature()))
    }

    pub fn methods(&self) -> impl Iterator<Item = &MethodModel> {
        self.classes.values().flat_map(|c| c.methods.values())
    }

    pub fn methods_mut(&mut self) -> impl Iterator<Item = &mut MethodModel> {
        self.classes.values_mut().flat_map(|c| c.methods.values_mut())
    }

    pub fn annotate(&mut self, key: &str, value: impl Serialize) {
        self.annotations
            .insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
    }

    pub fn annotation<T: serde::de::DeserializeOwned>(&self, key: &str) -> Option<T> {
        self.annotations
            .get(key)
            .and_then(|v| serde_json::from_value(v.clone()).ok())
    }
}

/// Errors from model construction and persistence.
#[derive(Debug, Error)]
pub enum CfgError {
    #[error("inconsistent model: {0}")]
    InconsistentModel(String),

    #[error("model file version {found} is newer than supported {supported}")]
    SerializationVersionMismatch { found: String, supported: String },

    #[error("corrupt model file: {0}")]
    CorruptModelFile(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

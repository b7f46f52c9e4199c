//! Front end: raw per-method instruction lists from class files or text IR.
//!
//! Two parsers produce the same [`RawClass`] shape: [`parse_class_file`] for
//! compiled `.class` bytes and [`parse_text_ir`] for the `.jbct` textual IR
//! (the canonical fixture format, so tests need no Java compiler).
//! [`load_project`] walks a classpath and closes over references from the
//! main class. [`render_text_ir`] pretty-prints back to the IR, which gives
//! the parse/render round-trip used by the test suite.

mod classfile;
mod loader;
pub mod opcodes;
mod textir;

pub use classfile::parse_class_file;
pub use loader::{load_project, LoadedProject};
pub use textir::{parse_text_ir, render_text_ir};

use std::collections::BTreeMap;
use thiserror::Error;

/// Control-flow classification of an instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrKind {
    Sequential,
    CondBranch,
    Goto,
    Switch,
    Invoke,
    Return,
    Throw,
    /// A node with no successors that is not a return or throw. Never
    /// produced by the class-file decoder; used by synthetic models.
    Terminal,
}

/// Dispatch mode of an invocation site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dispatch {
    Static,
    Virtual,
    Special,
    Interface,
}

impl Dispatch {
    pub fn mnemonic(self) -> &'static str {
        match self {
            Dispatch::Static => "invokestatic",
            Dispatch::Virtual => "invokevirtual",
            Dispatch::Special => "invokespecial",
            Dispatch::Interface => "invokeinterface",
        }
    }
}

/// Resolved symbolic reference of an invoke instruction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct InvokeRef {
    /// Internal name of the owner class, e.g. `java/util/Random`.
    pub owner: String,
    pub name: String,
    pub descriptor: String,
    pub dispatch: Dispatch,
}

/// One decoded bytecode instruction.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RawInstruction {
    /// Byte offset within the method's code array.
    pub offset: u32,
    pub mnemonic: String,
    pub kind: InstrKind,
    /// Branch target offsets: one for goto, one (the taken side) for
    /// conditional branches, all case targets plus default for switches.
    pub branch_targets: Vec<u32>,
    pub invoke_ref: Option<InvokeRef>,
    /// Source line, 0 when no line information is available.
    pub line: u32,
}

/// One method with its offset-ordered instruction list.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RawMethod {
    pub name: String,
    pub descriptor: String,
    pub is_static: bool,
    pub is_abstract: bool,
    pub instructions: Vec<RawInstruction>,
    /// Bytecode offset to source line, possibly empty.
    pub line_table: BTreeMap<u32, u32>,
}

impl RawMethod {
    /// Checks offset monotonicity and branch-target closure.
    pub fn validate(&self) -> Result<(), FrontendError> {
        let mut prev: Option<u32> = None;
        for ins in &self.instructions {
            if let Some(p) = prev {
                if ins.offset == p {
                    return Err(FrontendError::DuplicateOffset {
                        method: self.name.clone(),
                        offset: ins.offset,
                    });
                }
                if ins.offset < p {
                    return Err(FrontendError::MalformedClassFile(format!(
                        "instruction offsets not increasing in {} at {}",
                        self.name, ins.offset
                    )));
                }
            }
            prev = Some(ins.offset);
        }
        for ins in &self.instructions {
            for &t in &ins.branch_targets {
                if self.instructions.binary_search_by_key(&t, |i| i.offset).is_err() {
                    return Err(FrontendError::DanglingBranchTarget {
                        method: self.name.clone(),
                        offset: ins.offset,
                        target: t,
                    });
                }
            }
        }
        Ok(())
    }
}

/// One parsed class.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RawClass {
    /// Fully-qualified internal name, e.g. `com/example/Main`.
    pub name: String,
    /// Absent only for the root object class.
    pub super_name: Option<String>,
    pub interfaces: Vec<String>,
    pub methods: Vec<RawMethod>,
    pub is_interface: bool,
}

impl RawClass {
    pub fn method(&self, name: &str, descriptor: &str) -> Option<&RawMethod> {
        self.methods
            .iter()
            .find(|m| m.name == name && m.descriptor == descriptor)
    }
}

/// Errors from the class-file decoder, the text-IR parser and the loader.
#[derive(Debug, Error)]
pub enum FrontendError {
    #[error("malformed class file: {0}")]
    MalformedClassFile(String),

    #[error("unsupported class file version {major} (supported ceiling is {ceiling})")]
    UnsupportedVersion { major: u16, ceiling: u16 },

    #[error("unsupported opcode 0x{opcode:02x} ({mnemonic}) at offset {offset}")]
    UnsupportedOpcode {
        opcode: u8,
        mnemonic: &'static str,
        offset: u32,
    },

    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("duplicate instruction offset {offset} in method {method}")]
    DuplicateOffset { method: String, offset: u32 },

    #[error("branch at offset {offset} in method {method} targets missing offset {target}")]
    DanglingBranchTarget {
        method: String,
        offset: u32,
        target: u32,
    },

    #[error("main class {0} not found on the provided roots")]
    MainClassNotFound(String),

    #[error("class {name} is referenced, matches the include filter, but is absent")]
    ClassResolutionError { name: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Splits a `name(descriptor)` token as used in the text IR, e.g.
/// `isPrime(I)Z` or `<init>()V`.
pub(crate) fn split_name_descriptor(token: &str) -> Option<(&str, &str)> {
    let paren = token.find('(')?;
    let (name, desc) = token.split_at(paren);
    if name.is_empty() || !valid_method_descriptor(desc) {
        return None;
    }
    Some((name, desc))
}

/// Validates a JVM method descriptor, `(` field-types `)` return-type.
pub(crate) fn valid_method_descriptor(desc: &str) -> bool {
    let bytes = desc.as_bytes();
    if bytes.first() != Some(&b'(') {
        return false;
    }
    let mut i = 1;
    while i < bytes.len() && bytes[i] != b')' {
        match skip_field_type(bytes, i) {
            Some(next) => i = next,
            None => return false,
        }
    }
    if i >= bytes.len() {
        return false;
    }
    i += 1; // ')'
    if i < bytes.len() && bytes[i] == b'V' {
        return i + 1 == bytes.len();
    }
    matches!(skip_field_type(bytes, i), Some(next) if next == bytes.len())
}

fn skip_field_type(bytes: &[u8], mut i: usize) -> Option<usize> {
    while i < bytes.len() && bytes[i] == b'[' {
        i += 1;
    }
    match bytes.get(i)? {
        b'B' | b'C' | b'D' | b'F' | b'I' | b'J' | b'S' | b'Z' => Some(i + 1),
        b'L' => {
            let end = bytes[i..].iter().position(|&b| b == b';')?;
            if end == 1 {
                None
            } else {
                Some(i + end + 1)
            }
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptor_validation() {
        assert!(valid_method_descriptor("()V"));
        assert!(valid_method_descriptor("(I)Z"));
        assert!(valid_method_descriptor("([Ljava/lang/String;)V"));
        assert!(valid_method_descriptor("(IJ[D)Ljava/lang/Object;"));
        assert!(!valid_method_descriptor("()"));
        assert!(!valid_method_descriptor("(Q)V"));
        assert!(!valid_method_descriptor("I)V"));
        assert!(!valid_method_descriptor("(I)VV"));
        assert!(!valid_method_descriptor("(L;)V"));
    }

    #[test]
    fn name_descriptor_split() {
        assert_eq!(split_name_descriptor("<init>()V"), Some(("<init>", "()V")));
        assert_eq!(split_name_descriptor("isPrime(I)Z"), Some(("isPrime", "(I)Z")));
        assert_eq!(split_name_descriptor("nope"), None);
    }

    #[test]
    fn validation_flags_dangling_targets() {
        let m = RawMethod {
            name: "m".into(),
            descriptor: "()V".into(),
            is_static: false,
            is_abstract: false,
            instructions: vec![
                RawInstruction {
                    offset: 0,
                    mnemonic: "ifeq".into(),
                    kind: InstrKind::CondBranch,
                    branch_targets: vec![99],
                    invoke_ref: None,
                    line: 0,
                },
                RawInstruction {
                    offset: 3,
                    mnemonic: "return".into(),
                    kind: InstrKind::Return,
                    branch_targets: vec![],
                    invoke_ref: None,
                    line: 0,
                },
            ],
            line_table: BTreeMap::new(),
        };
        assert!(matches!(
            m.validate(),
            Err(FrontendError::DanglingBranchTarget { target: 99, .. })
        ));
    }
}

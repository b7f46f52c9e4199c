//! Versioned JSON persistence for the model (`.jbcmm.json`).

use super::{CfgError, Project};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Current `formatVersion`. Loading fails on a newer major version.
pub const FORMAT_VERSION: &str = "1.0";

#[derive(Serialize, Deserialize)]
struct ModelFile {
    #[serde(rename = "formatVersion")]
    format_version: String,
    #[serde(flatten)]
    project: Project,
}

#[derive(Deserialize)]
struct VersionProbe {
    #[serde(rename = "formatVersion")]
    format_version: String,
}

/// Serializes a project. Output is deterministic for equal inputs.
pub fn to_json(project: &Project) -> String {
    let file = ModelFile {
        format_version: FORMAT_VERSION.to_string(),
        project: project.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
    s.push('\n');
    s
}

/// Deserializes a project, checking the format version first.
pub fn from_json(text: &str) -> Result<Project, CfgError> {
    let probe: VersionProbe = serde_json::from_str(text)
        .map_err(|e| CfgError::CorruptModelFile(e.to_string()))?;
    let found_major = major_of(&probe.format_version);
    let supported_major = major_of(FORMAT_VERSION);
    match (found_major, supported_major) {
        (Some(f), Some(s)) if f <= s => {}
        _ => {
            return Err(CfgError::SerializationVersionMismatch {
                found: probe.format_version,
                supported: FORMAT_VERSION.to_string(),
            })
        }
    }
    let file: ModelFile = serde_json::from_str(text)
        .map_err(|e| CfgError::CorruptModelFile(e.to_string()))?;
    Ok(file.project)
}

fn major_of(version: &str) -> Option<u32> {
    version.split('.').next()?.parse().ok()
}

pub fn save_model(project: &Project, path: &Path) -> Result<(), CfgError> {
    std::fs::write(path, to_json(project)).map_err(|e| CfgError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn load_model(path: &Path) -> Result<Project, CfgError> {
    let text = std::fs::read_to_string(path).map_err(|e| CfgError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfgmodel::build_project;
    use crate::frontend::parse_text_ir;
    use std::collections::BTreeSet;

    fn sample_project() -> Project {
        let text = "\
class Main {
    method main()V static {
        0: iconst_0
        1: ifeq 5
        4: nop
        5: invokestatic Main.helper()V
        8: return
    }
    method helper()V static { 0: return }
}
";
        let raw = parse_text_ir(text).unwrap();
        let mut p = build_project(&raw, &BTreeSet::new(), "Main", ("main", "()V")).unwrap();
        p.annotate("note", "sample");
        p
    }

    #[test]
    fn round_trip_is_identity() {
        let p = sample_project();
        let loaded = from_json(&to_json(&p)).unwrap();
        assert_eq!(loaded, p);
    }

    #[test]
    fn newer_major_version_is_rejected() {
        let p = sample_project();
        let json = to_json(&p).replace("\"formatVersion\": \"1.0\"", "\"formatVersion\": \"99.0\"");
        assert!(matches!(
            from_json(&json),
            Err(CfgError::SerializationVersionMismatch { found, .. }) if found == "99.0"
        ));
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let p = sample_project();
        let json = to_json(&p);
        let truncated = &json[..json.len() / 2];
        assert!(matches!(from_json(truncated), Err(CfgError::CorruptModelFile(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jbcmm.json");
        let p = sample_project();
        save_model(&p, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), p);
    }
}

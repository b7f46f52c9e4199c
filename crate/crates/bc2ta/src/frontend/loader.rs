//! Classpath loading: collects classes from directories, `.class`/`.jbct`
//! files and jars, then closes over references from the main class.

use super::{parse_class_file, parse_text_ir, FrontendError, RawClass};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::Read;
use std::path::{Path, PathBuf};

/// Result of [`load_project`]: the included classes plus the names that
/// were referenced but intentionally left outside the model.
#[derive(Debug, Clone)]
pub struct LoadedProject {
    /// Sorted by class name.
    pub classes: Vec<RawClass>,
    pub external_stubs: BTreeSet<String>,
}

/// Prefixes of the platform library; references into these are always
/// recorded as external stubs, never resolved.
const PLATFORM_PREFIXES: &[&str] = &["java/", "javax/", "jdk/", "sun/", "com/sun/"];

/// Loads the transitive closure of classes referenced from `main_class`
/// via invoke owners and super/interface links, restricted to
/// `include_filter` (package prefixes; an empty filter or an empty-string
/// prefix matches everything). Classes outside the filter and platform
/// classes become external stubs recorded by name only.
pub fn load_project(
    roots: &[PathBuf],
    main_class: &str,
    include_filter: &[String],
) -> Result<LoadedProject, FrontendError> {
    let mut available: BTreeMap<String, RawClass> = BTreeMap::new();
    for root in roots {
        scan_root(root, &mut available)?;
    }

    let in_filter = |name: &str| -> bool {
        if include_filter.is_empty() {
            return true;
        }
        include_filter
            .iter()
            .map(|p| p.replace('.', "/"))
            .any(|p| name.starts_with(&p))
    };
    let platform = |name: &str| PLATFORM_PREFIXES.iter().any(|p| name.starts_with(p));

    if !available.contains_key(main_class) || !in_filter(main_class) {
        return Err(FrontendError::MainClassNotFound(main_class.to_string()));
    }

    let mut included: BTreeMap<String, RawClass> = BTreeMap::new();
    let mut stubs: BTreeSet<String> = BTreeSet::new();
    let mut queue: VecDeque<String> = VecDeque::new();
    queue.push_back(main_class.to_string());

    while let Some(name) = queue.pop_front() {
        if included.contains_key(&name) || stubs.contains(&name) {
            continue;
        }
        match available.get(&name) {
            Some(class) if in_filter(&name) => {
                for referenced in referenced_classes(class) {
                    if !included.contains_key(&referenced) && !stubs.contains(&referenced) {
                        queue.push_back(referenced);
                    }
                }
                included.insert(name.clone(), class.clone());
            }
            Some(_) => {
                stubs.insert(name);
            }
            None => {
                if platform(&name) || !in_filter(&name) {
                    stubs.insert(name);
                } else {
                    return Err(FrontendError::ClassResolutionError { name });
                }
            }
        }
    }

    Ok(LoadedProject {
        classes: included.into_values().collect(),
        external_stubs: stubs,
    })
}

fn referenced_classes(class: &RawClass) -> BTreeSet<String> {
    let mut refs = BTreeSet::new();
    if let Some(s) = &class.super_name {
        refs.insert(s.clone());
    }
    for i in &class.interfaces {
        refs.insert(i.clone());
    }
    for m in &class.methods {
        for ins in &m.instructions {
            if let Some(r) = &ins.invoke_ref {
                refs.insert(r.owner.clone());
            }
        }
    }
    refs
}

fn scan_root(
    root: &Path,
    available: &mut BTreeMap<String, RawClass>,
) -> Result<(), FrontendError> {
    if root.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(root)
            .map_err(|e| io_err(root, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();
        for entry in entries {
            scan_root(&entry, available)?;
        }
        return Ok(());
    }
    match root.extension().and_then(|e| e.to_str()) {
        Some("class") => {
            let bytes = std::fs::read(root).map_err(|e| io_err(root, e))?;
            let class = parse_class_file(&bytes)?;
            available.entry(class.name.clone()).or_insert(class);
        }
        Some("jbct") => {
            let text = std::fs::read_to_string(root).map_err(|e| io_err(root, e))?;
            for class in parse_text_ir(&text)? {
                available.entry(class.name.clone()).or_insert(class);
            }
        }
        Some("jar") | Some("zip") => {
            let file = std::fs::File::open(root).map_err(|e| io_err(root, e))?;
            let mut archive = zip::ZipArchive::new(file).map_err(|e| {
                FrontendError::MalformedClassFile(format!("{}: {e}", root.display()))
            })?;
            let mut names: Vec<String> = archive.file_names().map(str::to_string).collect();
            names.sort();
            for entry_name in names {
                if !entry_name.ends_with(".class") {
                    continue;
                }
                let mut entry = archive.by_name(&entry_name).map_err(|e| {
                    FrontendError::MalformedClassFile(format!("{entry_name}: {e}"))
                })?;
                let mut bytes = Vec::new();
                entry
                    .read_to_end(&mut bytes)
                    .map_err(|e| io_err(root, e))?;
                // Multi-release and module metadata entries are skipped.
                if entry_name.starts_with("META-INF/") {
                    continue;
                }
                let class = parse_class_file(&bytes)?;
                available.entry(class.name.clone()).or_insert(class);
            }
        }
        _ => {}
    }
    Ok(())
}

fn io_err(path: &Path, source: std::io::Error) -> FrontendError {
    FrontendError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture_dir() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("Main.class"), crate::synth::fig2_main_class_bytes())
            .unwrap();
        std::fs::write(dir.path().join("Math.class"), crate::synth::fig2_math_class_bytes())
            .unwrap();
        dir
    }

    #[test]
    fn closes_over_references_and_stubs_the_platform() {
        let dir = fixture_dir();
        let loaded =
            load_project(&[dir.path().to_path_buf()], "Main", &[String::new()]).unwrap();
        let names: Vec<&str> = loaded.classes.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["Main", "Math"]);
        assert!(loaded.external_stubs.contains("java/util/Random"));
        assert!(loaded.external_stubs.contains("java/lang/Object"));
    }

    #[test]
    fn filter_can_exclude_everything_but_main() {
        let dir = fixture_dir();
        let loaded =
            load_project(&[dir.path().to_path_buf()], "Main", &["Main".to_string()]).unwrap();
        let names: Vec<&str> = loaded.classes.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["Main"]);
        assert!(loaded.external_stubs.contains("Math"));
    }

    #[test]
    fn missing_main_class_is_an_error() {
        let dir = fixture_dir();
        let err =
            load_project(&[dir.path().to_path_buf()], "NoSuch", &[String::new()]).unwrap_err();
        assert!(matches!(err, FrontendError::MainClassNotFound(_)));
    }

    #[test]
    fn absent_in_filter_reference_is_a_resolution_error() {
        let dir = tempfile::tempdir().unwrap();
        let text = "class A { method main()V static { 0: invokestatic B.m()V 3: return } }";
        std::fs::write(dir.path().join("A.jbct"), text).unwrap();
        let err = load_project(&[dir.path().to_path_buf()], "A", &[String::new()]).unwrap_err();
        assert!(matches!(err, FrontendError::ClassResolutionError { name } if name == "B"));
    }

    #[test]
    fn jar_roots_are_read() {
        let dir = tempfile::tempdir().unwrap();
        let jar_path = dir.path().join("app.jar");
        let file = std::fs::File::create(&jar_path).unwrap();
        let mut w = zip::ZipWriter::new(file);
        let opts = zip::write::SimpleFileOptions::default();
        use std::io::Write;
        w.start_file("Main.class", opts).unwrap();
        w.write_all(&crate::synth::fig2_main_class_bytes()).unwrap();
        w.start_file("Math.class", opts).unwrap();
        w.write_all(&crate::synth::fig2_math_class_bytes()).unwrap();
        w.finish().unwrap();

        let loaded = load_project(&[jar_path], "Main", &[String::new()]).unwrap();
        assert_eq!(loaded.classes.len(), 2);
    }
}

//! Model construction from raw classes: edge synthesis, unreachable-code
//! pruning, and invocation-target resolution by class-hierarchy analysis.

use super::{
    CfgError, ClassModel, ControlFlowEdge, EdgeTag, InstrId, InstrKind, Instruction, MethodId,
    MethodModel, Offset, Project,
};
use crate::frontend::{Dispatch, RawClass};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Builds the control-flow model from parsed classes.
///
/// Adds a fallthrough edge after every sequential or invoke instruction,
/// a branch-taken/fallthrough pair after conditional branches, one edge
/// per goto or switch target, prunes instructions unreachable from the
/// method entry, and resolves invoke targets via class-hierarchy
/// analysis.
pub fn build_project(
    raw: &[RawClass],
    external_stubs: &BTreeSet<String>,
    main_class: &str,
    main_method: (&str, &str),
) -> Result<Project, CfgError> {
    let mut classes = BTreeMap::new();
    for class in raw {
        let mut methods = BTreeMap::new();
        for m in &class.methods {
            let id = MethodId::new(&class.name, &m.name, &m.descriptor);
            let model = build_method(id, m)?;
            methods.insert(model.id.signature(), model);
        }
        classes.insert(
            class.name.clone(),
            ClassModel {
                name: class.name.clone(),
                super_name: class.super_name.clone(),
                interfaces: class.interfaces.clone(),
                is_interface: class.is_interface,
                methods,
            },
        );
    }

    let mut project = Project {
        classes,
        main_class: main_class.to_string(),
        main_method: (main_method.0.to_string(), main_method.1.to_string()),
        external_stubs: external_stubs.clone(),
        annotations: BTreeMap::new(),
    };

    if project.method(&project.main_method_id()).is_none() {
        return Err(CfgError::InconsistentModel(format!(
            "main method {} not present",
            project.main_method_id()
        )));
    }
    check_super_chains(&project)?;
    resolve_all_invokes(&mut project);
    Ok(project)
}

fn build_method(id: MethodId, raw: &crate::frontend::RawMethod) -> Result<MethodModel, CfgError> {
    let mut instructions: BTreeMap<Offset, Instruction> = BTreeMap::new();
    for ins in &raw.instructions {
        instructions.insert(
            ins.offset,
            Instruction {
                offset: ins.offset,
                mnemonic: ins.mnemonic.clone(),
                kind: ins.kind.into(),
                line: ins.line,
                timing: None,
                invoke_ref: ins.invoke_ref.clone(),
                resolved_targets: Vec::new(),
                group_members: Vec::new(),
            },
        );
    }

    let offsets: Vec<Offset> = instructions.keys().copied().collect();
    let next_of = |offset: Offset| -> Option<Offset> {
        match offsets.binary_search(&offset) {
            Ok(i) => offsets.get(i + 1).copied(),
            Err(_) => None,
        }
    };

    let mut edges: BTreeSet<ControlFlowEdge> = BTreeSet::new();
    for ins in &raw.instructions {
        let kind: InstrKind = ins.kind.into();
        match kind {
            InstrKind::Sequential | InstrKind::Invoke => {
                let next = next_of(ins.offset).ok_or_else(|| {
                    CfgError::InconsistentModel(format!(
                        "{id}: instruction {} falls off the end of the method",
                        ins.offset
                    ))
                })?;
                edges.insert(ControlFlowEdge::new(ins.offset, next, EdgeTag::Fallthrough));
            }
            InstrKind::CondBranch => {
                let taken = ins.branch_targets[0];
                let next = next_of(ins.offset).ok_or_else(|| {
                    CfgError::InconsistentModel(format!(
                        "{id}: conditional branch {} has no fall-through",
                        ins.offset
                    ))
                })?;
                edges.insert(ControlFlowEdge::new(ins.offset, taken, EdgeTag::BranchTaken));
                edges.insert(ControlFlowEdge::new(ins.offset, next, EdgeTag::Fallthrough));
            }
            InstrKind::Goto => {
                edges.insert(ControlFlowEdge::new(
                    ins.offset,
                    ins.branch_targets[0],
                    EdgeTag::BranchTaken,
                ));
            }
            InstrKind::Switch => {
                for &t in &ins.branch_targets {
                    edges.insert(ControlFlowEdge::new(ins.offset, t, EdgeTag::SwitchCase));
                }
            }
            InstrKind::Return | InstrKind::Throw | InstrKind::Terminal => {}
            InstrKind::Dummy | InstrKind::Group => unreachable!("raw input has no synthetic kinds"),
        }
    }

    // Prune code unreachable from the entry.
    let entry = offsets.first().copied();
    if let Some(entry) = entry {
        let mut reachable: BTreeSet<Offset> = BTreeSet::new();
        let mut queue = VecDeque::from([entry]);
        while let Some(o) = queue.pop_front() {
            if !reachable.insert(o) {
                continue;
            }
            for e in edges.iter().filter(|e| e.source == o) {
                queue.push_back(e.target);
            }
        }
        instructions.retain(|o, _| reachable.contains(o));
        edges.retain(|e| reachable.contains(&e.source) && reachable.contains(&e.target));
    }

    let exits: BTreeSet<Offset> = instructions
        .values()
        .filter(|i| i.kind.is_exit())
        .map(|i| i.offset)
        .collect();

    let model = MethodModel {
        id,
        is_static: raw.is_static,
        is_abstract: raw.is_abstract,
        entry,
        exits,
        instructions,
        edges,
        loops: Vec::new(),
    };
    validate_method(&model)?;
    Ok(model)
}

fn validate_method(m: &MethodModel) -> Result<(), CfgError> {
    for e in &m.edges {
        if !m.instructions.contains_key(&e.source) || !m.instructions.contains_key(&e.target) {
            return Err(CfgError::InconsistentModel(format!(
                "{}: edge {}->{} has a missing endpoint",
                m.id, e.source, e.target
            )));
        }
    }
    for ins in m.instructions.values() {
        let degree = m.out_degree(ins.offset);
        if ins.kind.is_exit() {
            if degree != 0 {
                return Err(CfgError::InconsistentModel(format!(
                    "{}: exit instruction {} has outgoing edges",
                    m.id, ins.offset
                )));
            }
        } else if degree == 0 {
            return Err(CfgError::InconsistentModel(format!(
                "{}: non-exit instruction {} has no outgoing edges",
                m.id, ins.offset
            )));
        }
    }
    Ok(())
}

fn check_super_chains(project: &Project) -> Result<(), CfgError> {
    for class in project.classes.values() {
        let mut seen = BTreeSet::new();
        let mut cur = Some(class.name.clone());
        while let Some(name) = cur {
            if !seen.insert(name.clone()) {
                return Err(CfgError::InconsistentModel(format!(
                    "cyclic super chain through {name}"
                )));
            }
            cur = project
                .classes
                .get(&name)
                .and_then(|c| c.super_name.clone());
        }
    }
    Ok(())
}

fn resolve_all_invokes(project: &mut Project) {
    let hierarchy = Hierarchy::of(project);
    let mut updates: Vec<(MethodId, Offset, Vec<MethodId>)> = Vec::new();
    for method in project.methods() {
        for ins in method.instructions.values() {
            if ins.kind == InstrKind::Invoke {
                let targets = hierarchy.resolve(project, ins);
                updates.push((method.id.clone(), ins.offset, targets));
            }
        }
    }
    for (mid, offset, targets) in updates {
        if let Some(m) = project.method_mut(&mid) {
            if let Some(ins) = m.instructions.get_mut(&offset) {
                ins.resolved_targets = targets;
            }
        }
    }
}

/// Resolves the possible in-project implementations of a call site.
///
/// Static and special dispatch walk the super chain for the inherited
/// concrete method. Virtual and interface dispatch add every concrete
/// override declared in project subtypes of the static owner. Targets
/// outside the project resolve to nothing; such sites are external.
pub fn resolve_invocation_targets(project: &Project, call_site: &InstrId) -> Vec<MethodId> {
    let Some(method) = project.method(&call_site.method) else {
        return Vec::new();
    };
    let Some(ins) = method.instructions.get(&call_site.offset) else {
        return Vec::new();
    };
    if ins.kind != InstrKind::Invoke {
        return Vec::new();
    }
    Hierarchy::of(project).resolve(project, ins)
}

struct Hierarchy {
    /// Direct subclass / implementer links.
    children: BTreeMap<String, BTreeSet<String>>,
}

impl Hierarchy {
    fn of(project: &Project) -> Hierarchy {
        let mut children: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for class in project.classes.values() {
            if let Some(s) = &class.super_name {
                children.entry(s.clone()).or_default().insert(class.name.clone());
            }
            for i in &class.interfaces {
                children.entry(i.clone()).or_default().insert(class.name.clone());
            }
        }
        Hierarchy { children }
    }

    fn strict_subtypes(&self, owner: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut queue: VecDeque<&str> = VecDeque::from([owner]);
        while let Some(name) = queue.pop_front() {
            if let Some(kids) = self.children.get(name) {
                for kid in kids {
                    if out.insert(kid.clone()) {
                        queue.push_back(kid);
                    }
                }
            }
        }
        out
    }

    fn resolve(&self, project: &Project, ins: &Instruction) -> Vec<MethodId> {
        let Some(r) = &ins.invoke_ref else {
            return Vec::new();
        };
        let mut targets: BTreeSet<MethodId> = BTreeSet::new();
        match r.dispatch {
            Dispatch::Static | Dispatch::Special => {
                if let Some(t) = lookup_concrete(project, &r.owner, &r.name, &r.descriptor) {
                    targets.insert(t);
                }
            }
            Dispatch::Virtual | Dispatch::Interface => {
                if let Some(t) = lookup_concrete(project, &r.owner, &r.name, &r.descriptor) {
                    targets.insert(t);
                }
                for sub in self.strict_subtypes(&r.owner) {
                    if let Some(class) = project.classes.get(&sub) {
                        if let Some(m) = class.method(&r.name, &r.descriptor) {
                            if m.has_body() {
                                targets.insert(m.id.clone());
                            }
                        }
                    }
                }
            }
        }
        targets.into_iter().collect()
    }
}

/// Walks the super chain from `class` for a concrete (bodied)
/// implementation of `name`/`descriptor` inside the project.
fn lookup_concrete(
    project: &Project,
    class: &str,
    name: &str,
    descriptor: &str,
) -> Option<MethodId> {
    let mut cur = Some(class.to_string());
    while let Some(c) = cur {
        let cm = project.classes.get(&c)?;
        if let Some(m) = cm.method(name, descriptor) {
            if m.has_body() {
                return Some(m.id.clone());
            }
        }
        cur = cm.super_name.clone();
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_text_ir;

    pub(crate) fn project_from_text(text: &str, main_class: &str, main_sig: (&str, &str)) -> Project {
        let raw = parse_text_ir(text).unwrap();
        build_project(&raw, &BTreeSet::new(), main_class, main_sig).unwrap()
    }

    #[test]
    fn single_return_method_has_no_edges() {
        let p = project_from_text(
            "class A { method main()V static { 0: return } }",
            "A",
            ("main", "()V"),
        );
        let m = p.method(&MethodId::new("A", "main", "()V")).unwrap();
        assert_eq!(m.instructions.len(), 1);
        assert!(m.edges.is_empty());
        assert_eq!(m.exits, BTreeSet::from([0]));
    }

    #[test]
    fn cond_branch_gets_taken_and_fallthrough_edges() {
        let p = project_from_text(
            "class A { method main()V static { 10: ifeq 20 13: nop 14: goto 21 20: nop 21: return } }",
            "A",
            ("main", "()V"),
        );
        let m = p.method(&MethodId::new("A", "main", "()V")).unwrap();
        let out: Vec<_> = m.successors(10).collect();
        assert_eq!(out.len(), 2);
        assert!(out.contains(&&ControlFlowEdge::new(10, 20, EdgeTag::BranchTaken)));
        assert!(out.contains(&&ControlFlowEdge::new(10, 13, EdgeTag::Fallthrough)));
    }

    #[test]
    fn unreachable_code_is_pruned() {
        let p = project_from_text(
            "class A { method main()V static { 0: goto 5 3: nop 4: nop 5: return } }",
            "A",
            ("main", "()V"),
        );
        let m = p.method(&MethodId::new("A", "main", "()V")).unwrap();
        assert_eq!(m.instructions.len(), 2);
        assert!(!m.instructions.contains_key(&3));
    }

    #[test]
    fn virtual_dispatch_adds_subclass_overrides() {
        let text = "\
class A { method m()V abstract { } }
class B extends A { method m()V { 0: return } }
class C extends A { method m()V { 0: return } }
class Main { method main()V static { 0: invokevirtual A.m()V 3: return } }
";
        let p = project_from_text(text, "Main", ("main", "()V"));
        let m = p.method(&MethodId::new("Main", "main", "()V")).unwrap();
        let targets = &m.instructions[&0].resolved_targets;
        assert_eq!(
            targets,
            &vec![MethodId::new("B", "m", "()V"), MethodId::new("C", "m", "()V")]
        );
    }

    #[test]
    fn inherited_concrete_method_resolves_through_the_chain() {
        let text = "\
class P { method m()V { 0: return } }
class O extends P { }
class Main { method main()V static { 0: invokevirtual O.m()V 3: return } }
";
        let p = project_from_text(text, "Main", ("main", "()V"));
        let m = p.method(&MethodId::new("Main", "main", "()V")).unwrap();
        assert_eq!(m.instructions[&0].resolved_targets, vec![MethodId::new("P", "m", "()V")]);
    }

    #[test]
    fn external_owner_resolves_to_nothing() {
        let p = project_from_text(
            "class Main { method main()V static { 0: invokevirtual java/io/File.delete()Z 3: return } }",
            "Main",
            ("main", "()V"),
        );
        let m = p.method(&MethodId::new("Main", "main", "()V")).unwrap();
        assert!(m.instructions[&0].resolved_targets.is_empty());
    }

    #[test]
    fn falling_off_the_end_is_inconsistent() {
        let raw = parse_text_ir("class A { method main()V static { 0: nop } }").unwrap();
        let err =
            build_project(&raw, &BTreeSet::new(), "A", ("main", "()V")).unwrap_err();
        assert!(matches!(err, CfgError::InconsistentModel(_)));
    }
}

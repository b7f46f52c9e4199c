//! Natural-loop detection over the dominator tree, irreducible-cycle
//! reporting, and repetition limits.

use super::dominators::{compute_dominators, DominatorMap};
use super::AnalysisError;
use crate::cfgmodel::{
    ControlFlowEdge, EdgeTag, InstrId, LoopInfo, MethodId, MethodModel, Offset, Project,
};
use crate::parallel::{ordered_map, Parallelism};
use std::collections::{BTreeMap, BTreeSet};

/// A cycle that cannot be handled as a natural loop: a strongly connected
/// region with more than one entry node. Reported and left un-augmented.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrreducibleCycle {
    pub method: MethodId,
    pub nodes: BTreeSet<Offset>,
    pub entries: BTreeSet<Offset>,
}

/// Detects natural loops in one method.
///
/// A back edge is an edge `(n, h)` whose target dominates its source; the
/// loop of `h` is `h` plus every node that reaches a back-edge source
/// without passing `h`. Loops sharing a head are merged. Exit edges lead
/// from members to non-members; continue edges are in-loop edges whose
/// source also has an exit edge.
pub fn detect_loops(method: &MethodModel, doms: &DominatorMap) -> Vec<LoopInfo> {
    let mut by_head: BTreeMap<Offset, BTreeSet<Offset>> = BTreeMap::new();
    for e in &method.edges {
        if doms.dominates(e.target, e.source) {
            by_head.entry(e.target).or_default().insert(e.source);
        }
    }

    let mut loops = Vec::new();
    for (head, back_sources) in by_head {
        let mut members: BTreeSet<Offset> = BTreeSet::from([head]);
        let mut worklist: Vec<Offset> = Vec::new();
        for &s in &back_sources {
            if members.insert(s) {
                worklist.push(s);
            }
        }
        while let Some(v) = worklist.pop() {
            for p in method.predecessors(v) {
                if members.insert(p) {
                    worklist.push(p);
                }
            }
        }

        let back_edges: BTreeSet<(Offset, Offset)> =
            back_sources.iter().map(|&s| (s, head)).collect();
        let exit_edges: BTreeSet<(Offset, Offset)> = method
            .edges
            .iter()
            .filter(|e| members.contains(&e.source) && !members.contains(&e.target))
            .map(|e| (e.source, e.target))
            .collect();
        let exit_sources: BTreeSet<Offset> = exit_edges.iter().map(|&(s, _)| s).collect();
        let continue_edges: BTreeSet<(Offset, Offset)> = method
            .edges
            .iter()
            .filter(|e| {
                members.contains(&e.source)
                    && members.contains(&e.target)
                    && exit_sources.contains(&e.source)
            })
            .map(|e| (e.source, e.target))
            .collect();

        loops.push(LoopInfo {
            head,
            members,
            back_edges,
            exit_edges,
            continue_edges,
            limit: None,
        });
    }
    loops
}

/// Finds strongly connected regions with multiple entries: cycles natural
/// loops cannot cover. Recurses into single-entry regions so nested
/// irreducibility is found too.
pub fn find_irreducible_cycles(method: &MethodModel) -> Vec<IrreducibleCycle> {
    let nodes: BTreeSet<Offset> = method.instructions.keys().copied().collect();
    let mut out = Vec::new();
    refine(method, &nodes, &mut out);
    out
}

fn refine(method: &MethodModel, nodes: &BTreeSet<Offset>, out: &mut Vec<IrreducibleCycle>) {
    for scc in sccs(nodes, method) {
        let nontrivial = scc.len() > 1
            || method
                .successors(*scc.iter().next().expect("nonempty"))
                .any(|e| e.target == e.source);
        if !nontrivial {
            continue;
        }
        let entries: BTreeSet<Offset> = scc
            .iter()
            .copied()
            .filter(|&v| {
                method
                    .predecessors(v)
                    .iter()
                    .any(|p| !scc.contains(p))
                    || Some(v) == method.entry
            })
            .collect();
        if entries.len() == 1 {
            let header = *entries.iter().next().expect("one entry");
            let mut inner = scc.clone();
            inner.remove(&header);
            if !inner.is_empty() {
                refine(method, &inner, out);
            }
        } else {
            out.push(IrreducibleCycle {
                method: method.id.clone(),
                nodes: scc,
                entries,
            });
        }
    }
}

/// Tarjan over the subgraph induced by `nodes`.
fn sccs(nodes: &BTreeSet<Offset>, method: &MethodModel) -> Vec<BTreeSet<Offset>> {
    struct State<'a> {
        method: &'a MethodModel,
        nodes: &'a BTreeSet<Offset>,
        index: BTreeMap<Offset, u32>,
        low: BTreeMap<Offset, u32>,
        on_stack: BTreeSet<Offset>,
        stack: Vec<Offset>,
        next: u32,
        out: Vec<BTreeSet<Offset>>,
    }
    impl State<'_> {
        fn visit(&mut self, v: Offset) {
            self.index.insert(v, self.next);
            self.low.insert(v, self.next);
            self.next += 1;
            self.stack.push(v);
            self.on_stack.insert(v);
            let succs: Vec<Offset> = self
                .method
                .successors(v)
                .map(|e| e.target)
                .filter(|t| self.nodes.contains(t))
                .collect();
            for w in succs {
                if !self.index.contains_key(&w) {
                    self.visit(w);
                    let lw = self.low[&w];
                    let lv = self.low[&v];
                    self.low.insert(v, lv.min(lw));
                } else if self.on_stack.contains(&w) {
                    let iw = self.index[&w];
                    let lv = self.low[&v];
                    self.low.insert(v, lv.min(iw));
                }
            }
            if self.low[&v] == self.index[&v] {
                let mut scc = BTreeSet::new();
                while let Some(w) = self.stack.pop() {
                    self.on_stack.remove(&w);
                    scc.insert(w);
                    if w == v {
                        break;
                    }
                }
                self.out.push(scc);
            }
        }
    }
    let mut st = State {
        method,
        nodes,
        index: BTreeMap::new(),
        low: BTreeMap::new(),
        on_stack: BTreeSet::new(),
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for &v in nodes {
        if !st.index.contains_key(&v) {
            st.visit(v);
        }
    }
    st.out
}

/// Per-method loop report for the whole project.
#[derive(Debug, Clone, Default)]
pub struct LoopReport {
    pub irreducible: Vec<IrreducibleCycle>,
}

/// Runs dominator analysis and loop detection on every method, stores the
/// loops in the model, and retags loop edges. Methods are independent, so
/// the pass is data parallel.
pub fn detect_loops_project(project: &mut Project, mode: Parallelism) -> LoopReport {
    let ids: Vec<MethodId> = project
        .methods()
        .filter(|m| m.has_body())
        .map(|m| m.id.clone())
        .collect();
    let computed: Vec<(MethodId, Vec<LoopInfo>, Vec<IrreducibleCycle>)> =
        ordered_map(mode, ids, |id| {
            let method = project.method(&id).expect("listed method");
            let doms = compute_dominators(method);
            let loops = detect_loops(method, &doms);
            let irreducible = find_irreducible_cycles(method);
            (id, loops, irreducible)
        });

    let mut report = LoopReport::default();
    for (id, loops, irreducible) in computed {
        report.irreducible.extend(irreducible);
        let method = project.method_mut(&id).expect("listed method");
        retag_edges(method, &loops);
        method.loops = loops;
    }
    project.annotate("loopsDetected", true);
    report
}

/// Rewrites edge tags from the loop edge sets. An edge playing several
/// roles keeps the highest-priority tag: back edge, then exit, then
/// continue.
fn retag_edges(method: &mut MethodModel, loops: &[LoopInfo]) {
    let mut tags: BTreeMap<(Offset, Offset), EdgeTag> = BTreeMap::new();
    let mut upgrade = |pair: (Offset, Offset), tag: EdgeTag| {
        let slot = tags.entry(pair).or_insert(tag);
        let rank = |t: EdgeTag| match t {
            EdgeTag::BackEdge => 0,
            EdgeTag::LoopExit => 1,
            EdgeTag::LoopContinue => 2,
            _ => 3,
        };
        if rank(tag) < rank(*slot) {
            *slot = tag;
        }
    };
    for l in loops {
        for &e in &l.back_edges {
            upgrade(e, EdgeTag::BackEdge);
        }
        for &e in &l.exit_edges {
            upgrade(e, EdgeTag::LoopExit);
        }
        for &e in &l.continue_edges {
            upgrade(e, EdgeTag::LoopContinue);
        }
    }
    let rewritten: BTreeSet<ControlFlowEdge> = method
        .edges
        .iter()
        .map(|e| match tags.get(&(e.source, e.target)) {
            Some(&tag) => ControlFlowEdge::new(e.source, e.target, tag),
            None => *e,
        })
        .collect();
    method.edges = rewritten;
}

/// Applies repetition limits: an explicit per-head entry when present,
/// else the default. Keys that do not name a detected loop head are
/// rejected.
pub fn apply_loop_limits(
    mut project: Project,
    limits: &BTreeMap<InstrId, u32>,
    default_limit: u32,
) -> Result<Project, AnalysisError> {
    if default_limit == 0 {
        return Err(AnalysisError::InvalidLoopLimit {
            site: "default".into(),
        });
    }
    let mut heads: BTreeSet<InstrId> = BTreeSet::new();
    for method in project.methods() {
        for l in &method.loops {
            heads.insert(InstrId {
                method: method.id.clone(),
                offset: l.head,
            });
        }
    }
    for (id, &limit) in limits {
        if limit == 0 {
            return Err(AnalysisError::InvalidLoopLimit {
                site: id.to_string(),
            });
        }
        if !heads.contains(id) {
            return Err(AnalysisError::UnknownLoopHead { site: id.to_string() });
        }
    }
    for method in project.methods_mut() {
        let mid = method.id.clone();
        for l in &mut method.loops {
            let key = InstrId {
                method: mid.clone(),
                offset: l.head,
            };
            l.limit = Some(limits.get(&key).copied().unwrap_or(default_limit));
        }
    }
    project.annotate("defaultLoopLimit", default_limit);
    Ok(project)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyses::oracles::loop_members_by_path_search;
    use crate::cfgmodel::{build_project, MethodId};
    use crate::frontend::parse_text_ir;

    fn method_of(text: &str, class: &str, sig: (&str, &str)) -> (Project, MethodId) {
        let raw = parse_text_ir(text).unwrap();
        let p = build_project(&raw, &BTreeSet::new(), class, sig).unwrap();
        (p, MethodId::new(class, sig.0, sig.1))
    }

    #[test]
    fn loop_free_method_detects_nothing() {
        let (p, id) = method_of(
            "class A { method main()V static { 0: nop 1: return } }",
            "A",
            ("main", "()V"),
        );
        let m = p.method(&id).unwrap();
        let doms = compute_dominators(m);
        assert!(detect_loops(m, &doms).is_empty());
        assert!(find_irreducible_cycles(m).is_empty());
    }

    #[test]
    fn while_loop_shape_with_members_exits_and_continues() {
        let text = "\
class A { method main()V static {
    0: iconst_0
    1: istore_1
    2: iload_1
    3: ifge 12
    6: iinc 1 1
    9: goto 2
    12: return
} }";
        let (p, id) = method_of(text, "A", ("main", "()V"));
        let m = p.method(&id).unwrap();
        let doms = compute_dominators(m);
        let loops = detect_loops(m, &doms);
        assert_eq!(loops.len(), 1);
        let l = &loops[0];
        assert_eq!(l.head, 2);
        assert_eq!(l.members, BTreeSet::from([2, 3, 6, 9]));
        assert_eq!(l.back_edges, BTreeSet::from([(9, 2)]));
        assert_eq!(l.exit_edges, BTreeSet::from([(3, 12)]));
        assert_eq!(l.continue_edges, BTreeSet::from([(3, 6)]));

        let nodes: Vec<Offset> = m.instructions.keys().copied().collect();
        let oracle = loop_members_by_path_search(
            &nodes,
            |o| m.successors(o).map(|e| e.target).collect(),
            l.head,
            &BTreeSet::from([9]),
        );
        assert_eq!(l.members, oracle);
    }

    #[test]
    fn nested_loops_have_nested_membership() {
        let text = "\
class A { method main()V static {
    0: iconst_0
    1: istore_1
    2: iload_1
    3: ifge 20
    6: iconst_0
    7: istore_2
    8: iload_2
    9: ifge 16
    12: iinc 2 1
    13: goto 8
    16: iinc 1 1
    17: goto 2
    20: return
} }";
        let (p, id) = method_of(text, "A", ("main", "()V"));
        let m = p.method(&id).unwrap();
        let doms = compute_dominators(m);
        let loops = detect_loops(m, &doms);
        assert_eq!(loops.len(), 2);
        let outer = loops.iter().find(|l| l.head == 2).unwrap();
        let inner = loops.iter().find(|l| l.head == 8).unwrap();
        assert!(inner.members.is_subset(&outer.members));
        assert!(inner.members.len() < outer.members.len());
        for l in &loops {
            let nodes: Vec<Offset> = m.instructions.keys().copied().collect();
            let sources: BTreeSet<Offset> = l.back_edges.iter().map(|&(s, _)| s).collect();
            let oracle = loop_members_by_path_search(
                &nodes,
                |o| m.successors(o).map(|e| e.target).collect(),
                l.head,
                &sources,
            );
            assert_eq!(l.members, oracle, "head {}", l.head);
        }
    }

    #[test]
    fn multi_entry_cycle_is_reported_irreducible() {
        // 0 branches to both 4 and 7, which form a cycle.
        let text = "\
class A { method main()V static {
    0: ifeq 7
    3: goto 4
    4: ifeq 7
    7: ifeq 4
    10: return
} }";
        let (p, id) = method_of(text, "A", ("main", "()V"));
        let m = p.method(&id).unwrap();
        let doms = compute_dominators(m);
        assert!(detect_loops(m, &doms).is_empty(), "no dominating head");
        let irr = find_irreducible_cycles(m);
        assert_eq!(irr.len(), 1);
        assert_eq!(irr[0].nodes, BTreeSet::from([4, 7]));
        assert_eq!(irr[0].entries, BTreeSet::from([4, 7]));
    }

    #[test]
    fn limits_default_override_and_unknown_head() {
        let text = "\
class A { method main()V static {
    0: iconst_0
    1: istore_1
    2: iload_1
    3: ifge 12
    6: iinc 1 1
    9: goto 2
    12: return
} }";
        let (mut p, id) = method_of(text, "A", ("main", "()V"));
        detect_loops_project(&mut p, Parallelism::Sequential);

        let defaulted = apply_loop_limits(p.clone(), &BTreeMap::new(), 5).unwrap();
        assert_eq!(defaulted.method(&id).unwrap().loops[0].limit, Some(5));

        let head = InstrId { method: id.clone(), offset: 2 };
        let explicit =
            apply_loop_limits(p.clone(), &BTreeMap::from([(head, 3)]), 5).unwrap();
        assert_eq!(explicit.method(&id).unwrap().loops[0].limit, Some(3));

        let bogus = InstrId { method: id.clone(), offset: 6 };
        let err = apply_loop_limits(p, &BTreeMap::from([(bogus, 3)]), 5).unwrap_err();
        assert!(matches!(err, AnalysisError::UnknownLoopHead { .. }));
    }

    #[test]
    fn retagging_marks_back_exit_and_continue_edges() {
        let text = "\
class A { method main()V static {
    0: iconst_0
    1: istore_1
    2: iload_1
    3: ifge 12
    6: iinc 1 1
    9: goto 2
    12: return
} }";
        let (mut p, id) = method_of(text, "A", ("main", "()V"));
        detect_loops_project(&mut p, Parallelism::Sequential);
        let m = p.method(&id).unwrap();
        let tag_of = |s: Offset, t: Offset| {
            m.edges
                .iter()
                .find(|e| e.source == s && e.target == t)
                .map(|e| e.tag)
                .unwrap()
        };
        assert_eq!(tag_of(9, 2), EdgeTag::BackEdge);
        assert_eq!(tag_of(3, 12), EdgeTag::LoopExit);
        assert_eq!(tag_of(3, 6), EdgeTag::LoopContinue);
        assert_eq!(tag_of(2, 3), EdgeTag::Fallthrough);
    }
}

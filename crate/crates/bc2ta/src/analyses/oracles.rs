//! Brute-force reference implementations used by the test suites as
//! independent oracles. These deliberately take the definitional route
//! (path enumeration, node removal) rather than the algorithms under
//! test, and are not used anywhere in the production pipeline.

use crate::cfgmodel::Offset;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

fn reachable_from(
    start: Offset,
    nodes: &[Offset],
    succ: &impl Fn(Offset) -> Vec<Offset>,
    removed: Option<Offset>,
) -> BTreeSet<Offset> {
    let node_set: BTreeSet<Offset> = nodes.iter().copied().collect();
    let mut seen = BTreeSet::new();
    if Some(start) == removed || !node_set.contains(&start) {
        return seen;
    }
    let mut queue = VecDeque::from([start]);
    seen.insert(start);
    while let Some(u) = queue.pop_front() {
        for v in succ(u) {
            if Some(v) == removed || !node_set.contains(&v) || seen.contains(&v) {
                continue;
            }
            seen.insert(v);
            queue.push_back(v);
        }
    }
    seen
}

/// Immediate dominators by the path definition: `d` dominates `n` iff
/// removing `d` makes `n` unreachable from the entry. Returns a map over
/// the reachable nodes; the entry maps to itself.
pub fn graph_dominators(
    entry: Offset,
    n: u32,
    succ: impl Fn(Offset) -> Vec<Offset>,
) -> BTreeMap<Offset, Offset> {
    let nodes: Vec<Offset> = (0..n).collect();
    let reachable = reachable_from(entry, &nodes, &succ, None);

    let mut dom_sets: BTreeMap<Offset, BTreeSet<Offset>> = BTreeMap::new();
    for &v in &reachable {
        let mut doms: BTreeSet<Offset> = BTreeSet::from([v]);
        for &d in &reachable {
            if d == v {
                continue;
            }
            let without = reachable_from(entry, &nodes, &succ, Some(d));
            if !without.contains(&v) {
                doms.insert(d);
            }
        }
        dom_sets.insert(v, doms);
    }

    let mut idom = BTreeMap::new();
    for (&v, doms) in &dom_sets {
        if v == entry {
            idom.insert(v, v);
            continue;
        }
        // The immediate dominator is the strict dominator with the
        // largest dominator set of its own (dominator sets on a node's
        // dominators are totally ordered by inclusion).
        let best = doms
            .iter()
            .filter(|&&d| d != v)
            .max_by_key(|&&d| dom_sets[&d].len())
            .copied()
            .expect("every reachable non-entry node has a dominator");
        idom.insert(v, best);
    }
    idom
}

/// Natural-loop membership by explicit path search: the head plus every
/// node that reaches some back-edge source without passing through the
/// head.
pub fn loop_members_by_path_search(
    nodes: &[Offset],
    succ: impl Fn(Offset) -> Vec<Offset>,
    head: Offset,
    back_sources: &BTreeSet<Offset>,
) -> BTreeSet<Offset> {
    // Predecessor map with the head removed, then reverse reachability
    // from the back-edge sources.
    let mut preds: BTreeMap<Offset, Vec<Offset>> =
        nodes.iter().map(|&o| (o, Vec::new())).collect();
    for &u in nodes {
        if u == head {
            continue;
        }
        for v in succ(u) {
            if v == head {
                continue;
            }
            if let Some(p) = preds.get_mut(&v) {
                p.push(u);
            }
        }
    }
    let mut members: BTreeSet<Offset> = BTreeSet::from([head]);
    let mut queue: VecDeque<Offset> = back_sources.iter().copied().collect();
    for &s in back_sources {
        members.insert(s);
    }
    while let Some(v) = queue.pop_front() {
        for &p in preds.get(&v).into_iter().flatten() {
            if members.insert(p) {
                queue.push_back(p);
            }
        }
    }
    members
}

//! Immediate dominators by the iterative intersection algorithm over a
//! reverse-postorder numbering.

use crate::cfgmodel::{MethodModel, Offset};
use std::collections::BTreeMap;

/// Immediate-dominator map of one method; the entry maps to itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominatorMap {
    pub idom: BTreeMap<Offset, Offset>,
    entry: Offset,
}

impl DominatorMap {
    pub fn entry(&self) -> Offset {
        self.entry
    }

    /// Does `d` dominate `n`? Reflexive.
    pub fn dominates(&self, d: Offset, n: Offset) -> bool {
        let mut cur = n;
        loop {
            if cur == d {
                return true;
            }
            match self.idom.get(&cur) {
                Some(&parent) if parent != cur => cur = parent,
                _ => return false,
            }
        }
    }

    /// Strict dominators of `n`, closest first.
    pub fn strict_dominators(&self, n: Offset) -> Vec<Offset> {
        let mut out = Vec::new();
        let mut cur = n;
        while let Some(&parent) = self.idom.get(&cur) {
            if parent == cur {
                break;
            }
            out.push(parent);
            cur = parent;
        }
        out
    }
}

/// Computes immediate dominators for a method with a body.
///
/// Fixed point of the standard intersection iteration in reverse
/// postorder; deterministic for a given CFG.
pub fn compute_dominators(method: &MethodModel) -> DominatorMap {
    let entry = method.entry.expect("method with body");
    compute_dominators_generic(
        entry,
        method.instructions.keys().copied().collect(),
        |o| method.successors(o).map(|e| e.target).collect(),
    )
}

/// Dominators over an arbitrary rooted graph; shared by the method path
/// and the synthetic-graph test oracles.
pub fn compute_dominators_generic(
    entry: Offset,
    nodes: Vec<Offset>,
    successors: impl Fn(Offset) -> Vec<Offset>,
) -> DominatorMap {
    // Reverse postorder over reachable nodes.
    let index_of: BTreeMap<Offset, usize> = nodes.iter().copied().zip(0..).collect();
    let n = nodes.len();
    let mut visited = vec![false; n];
    let mut postorder: Vec<Offset> = Vec::with_capacity(n);
    // Iterative DFS with an explicit successor cursor.
    let mut stack: Vec<(Offset, Vec<Offset>, usize)> = Vec::new();
    visited[index_of[&entry]] = true;
    stack.push((entry, successors(entry), 0));
    while let Some((node, succs, cursor)) = stack.last_mut() {
        if let Some(&next) = succs.get(*cursor) {
            *cursor += 1;
            let Some(&ni) = index_of.get(&next) else { continue };
            if !visited[ni] {
                visited[ni] = true;
                stack.push((next, successors(next), 0));
            }
        } else {
            postorder.push(*node);
            stack.pop();
        }
    }
    let rpo: Vec<Offset> = postorder.iter().rev().copied().collect();
    let rpo_number: BTreeMap<Offset, usize> = rpo.iter().copied().zip(0..).collect();

    // Predecessors restricted to reachable nodes.
    let mut preds: BTreeMap<Offset, Vec<Offset>> = rpo.iter().map(|&o| (o, Vec::new())).collect();
    for &o in &rpo {
        for s in successors(o) {
            if let Some(p) = preds.get_mut(&s) {
                p.push(o);
            }
        }
    }

    let mut idom: BTreeMap<Offset, Option<Offset>> = rpo.iter().map(|&o| (o, None)).collect();
    idom.insert(entry, Some(entry));

    let intersect = |idom: &BTreeMap<Offset, Option<Offset>>, mut a: Offset, mut b: Offset| {
        while a != b {
            while rpo_number[&a] > rpo_number[&b] {
                a = idom[&a].expect("processed");
            }
            while rpo_number[&b] > rpo_number[&a] {
                b = idom[&b].expect("processed");
            }
        }
        a
    };

    let mut changed = true;
    while changed {
        changed = false;
        for &node in rpo.iter().skip(1) {
            let mut new_idom: Option<Offset> = None;
            for &p in &preds[&node] {
                if idom[&p].is_none() {
                    continue;
                }
                new_idom = Some(match new_idom {
                    None => p,
                    Some(cur) => intersect(&idom, p, cur),
                });
            }
            if let Some(ni) = new_idom {
                if idom[&node] != Some(ni) {
                    idom.insert(node, Some(ni));
                    changed = true;
                }
            }
        }
    }

    DominatorMap {
        idom: idom.into_iter().map(|(k, v)| (k, v.expect("reachable"))).collect(),
        entry,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyses::oracles::graph_dominators;

    #[test]
    fn chain_dominators() {
        // a(0) -> b(1) -> c(2)
        let d = compute_dominators_generic(0, vec![0, 1, 2], |o| match o {
            0 => vec![1],
            1 => vec![2],
            _ => vec![],
        });
        assert_eq!(d.idom[&1], 0);
        assert_eq!(d.idom[&2], 1);
        assert_eq!(d.idom[&0], 0);
    }

    #[test]
    fn diamond_join_is_dominated_by_the_fork() {
        // a(0) -> b(1), c(2); b,c -> d(3)
        let d = compute_dominators_generic(0, vec![0, 1, 2, 3], |o| match o {
            0 => vec![1, 2],
            1 | 2 => vec![3],
            _ => vec![],
        });
        assert_eq!(d.idom[&3], 0);
        assert!(d.dominates(0, 3));
        assert!(!d.dominates(1, 3));
    }

    #[test]
    fn loop_back_edge_keeps_header_dominating() {
        // 0 -> 1 -> 2 -> 1, 2 -> 3
        let d = compute_dominators_generic(0, vec![0, 1, 2, 3], |o| match o {
            0 => vec![1],
            1 => vec![2],
            2 => vec![1, 3],
            _ => vec![],
        });
        assert_eq!(d.idom[&1], 0);
        assert_eq!(d.idom[&2], 1);
        assert_eq!(d.idom[&3], 2);
        assert!(d.dominates(1, 2));
    }

    #[test]
    fn matches_brute_force_on_random_12_node_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xd0_0d);
        for _ in 0..200 {
            let n = 12u32;
            let mut succ: Vec<Vec<Offset>> = vec![Vec::new(); n as usize];
            for u in 0..n {
                for v in 0..n {
                    if u != v && rng.gen_bool(0.18) {
                        succ[u as usize].push(v);
                    }
                }
            }
            // Keep every node reachable so both sides see the same graph.
            for v in 1..n {
                let u = rng.gen_range(0..v);
                if !succ[u as usize].contains(&v) {
                    succ[u as usize].push(v);
                }
            }
            let got = compute_dominators_generic(0, (0..n).collect(), |o| succ[o as usize].clone());
            let want = graph_dominators(0, n, |o| succ[o as usize].clone());
            assert_eq!(got.idom, want, "graph {succ:?}");
        }
    }
}

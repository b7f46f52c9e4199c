//! Model element counts, printable as the aligned A–H summary table.

use super::{InstrKind, Project};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Element counts of a project. `total` is the model size A+B+C+D+E.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    /// A: classes.
    pub class_count: u64,
    /// B: methods.
    pub method_count: u64,
    /// C: detected loops (0 before loop detection has run).
    pub loop_count: u64,
    /// D: instructions.
    pub instruction_count: u64,
    /// E: control-flow edges.
    pub edge_count: u64,
    /// F: invoke sites with at least one in-project implementation.
    pub resolvable_call_count: u64,
    /// G: possible in-project implementations summed over invoke sites.
    pub invocable_implementation_count: u64,
    /// H: return instructions.
    pub return_instruction_count: u64,
    pub total: u64,
}

/// Counts model elements. Loop counts reflect whatever detection has been
/// run; on a freshly built project C is 0.
pub fn compute_stats(project: &Project) -> StatsReport {
    let mut s = StatsReport {
        class_count: project.classes.len() as u64,
        method_count: 0,
        loop_count: 0,
        instruction_count: 0,
        edge_count: 0,
        resolvable_call_count: 0,
        invocable_implementation_count: 0,
        return_instruction_count: 0,
        total: 0,
    };
    for method in project.methods() {
        s.method_count += 1;
        s.loop_count += method.loops.len() as u64;
        s.instruction_count += method.instructions.len() as u64;
        s.edge_count += method.edges.len() as u64;
        for ins in method.instructions.values() {
            match ins.kind {
                InstrKind::Invoke => {
                    if !ins.resolved_targets.is_empty() {
                        s.resolvable_call_count += 1;
                        s.invocable_implementation_count += ins.resolved_targets.len() as u64;
                    }
                }
                InstrKind::Return => s.return_instruction_count += 1,
                _ => {}
            }
        }
    }
    s.total = s.class_count + s.method_count + s.loop_count + s.instruction_count + s.edge_count;
    s
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header = [
            "Class (A)",
            "Method (B)",
            "Loop (C)",
            "Instruction (D)",
            "Edge (E)",
            "Method Call (F)",
            "Method Invoc. (G)",
            "Return Instr. (H)",
            "Total (A+B+C+D+E)",
        ];
        let values = [
            self.class_count,
            self.method_count,
            self.loop_count,
            self.instruction_count,
            self.edge_count,
            self.resolvable_call_count,
            self.invocable_implementation_count,
            self.return_instruction_count,
            self.total,
        ];
        for (name, value) in header.iter().zip(values) {
            writeln!(f, "{name:<19} {value:>12}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfgmodel::build_project;
    use crate::frontend::parse_text_ir;
    use std::collections::BTreeSet;

    #[test]
    fn minimal_main_counts_by_hand() {
        // Hand count: A=1 class, B=2 methods, D=1+3=4 instructions,
        // E=0+2 edges, H=2 returns, C=0, F=G=0 (the super call is
        // external), total=1+2+0+4+2=9.
        let text = "\
class Main {
    method main()V static { 0: return }
    method <init>()V {
        0: aload_0
        1: invokespecial java/lang/Object.<init>()V
        4: return
    }
}
";
        let raw = parse_text_ir(text).unwrap();
        let p = build_project(&raw, &BTreeSet::new(), "Main", ("main", "()V")).unwrap();
        let s = compute_stats(&p);
        assert_eq!(s.class_count, 1);
        assert_eq!(s.method_count, 2);
        assert_eq!(s.loop_count, 0);
        assert_eq!(s.instruction_count, 4);
        assert_eq!(s.edge_count, 2);
        assert_eq!(s.resolvable_call_count, 0);
        assert_eq!(s.invocable_implementation_count, 0);
        assert_eq!(s.return_instruction_count, 2);
        assert_eq!(s.total, 9);
    }

    #[test]
    fn table_renders_all_rows() {
        let text = "class A { method main()V static { 0: return } }";
        let raw = parse_text_ir(text).unwrap();
        let p = build_project(&raw, &BTreeSet::new(), "A", ("main", "()V")).unwrap();
        let rendered = compute_stats(&p).to_string();
        assert_eq!(rendered.lines().count(), 9);
        assert!(rendered.contains("Total (A+B+C+D+E)"));
    }
}

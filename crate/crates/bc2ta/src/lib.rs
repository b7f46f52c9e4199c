//! Derivation of timed-automata models from JVM bytecode.
//!
//! The pipeline mirrors its command-line stages:
//!
//! 1. [`frontend`] parses compiled class files or the textual `.jbct` IR
//!    into raw per-method instruction lists.
//! 2. [`cfgmodel`] builds the persistent control-flow model (classes,
//!    methods, instructions, edges) and resolves invocation targets.
//! 3. [`analyses`] enriches the model: dominators, natural loops and
//!    repetition limits, call graph and recursion handling, timing
//!    bounds, and straight-line node grouping.
//! 4. [`tamodel`] transforms the enriched model into a network of timed
//!    automata with call/return channel synchronization.
//! 5. [`uppaalio`] renders the network as UPPAAL-compatible XML plus a
//!    query file, and parses it back.
//! 6. [`checker`] explores the network under discrete-time semantics:
//!    invariant/reachability/deadlock queries, WCET bound sweeps, and
//!    state-space statistics with optional symmetry canonicalization.

pub mod analyses;
pub mod cfgmodel;
pub mod checker;
pub mod frontend;
pub mod parallel;
pub mod synth;
pub mod tamodel;
pub mod uppaalio;

pub use cfgmodel::Project;
pub use tamodel::TaSystem;

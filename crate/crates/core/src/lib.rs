//! Multi-perspective agent memory.
//!
//! Goal-conditioned perspectives encode a shared stream of observations into
//! separate knowledge graphs. At query time each perspective proposes an
//! interpretation, critiques the others, and the resulting attack graph is
//! resolved under grounded semantics. The graph doubles as a contrastive
//! explanation of which interpretation was kept and why the others were not.
//!
//! Module map:
//! - [`argumentation`]: attack graphs, grounded/preferred semantics, mode classification.
//! - [`kgstore`]: per-perspective TBox/ABox, the Turtle subset, curation weights.
//! - [`buffer`]: the shared observation staging log.
//! - [`perspective`]: goal-perspective agents and their backends.
//! - [`arbiter`]: encoding cycles, the query protocol, responses and explanations.
//! - [`scenario`]: JSON scenario files, golden checks and artifact output.
//! - [`cli`]: the `rashomon` command.

pub mod arbiter;
pub mod argumentation;
pub mod buffer;
pub mod cli;
pub mod kgstore;
pub mod perspective;
pub mod scenario;

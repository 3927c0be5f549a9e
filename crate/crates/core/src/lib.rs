//! Mode checking and clause-body reordering for mini-HAL.
//!
//! The pipeline is `frontend` (parse, expand, normalize, type) feeding the
//! `scheduler`, which works over ti-grammars from `grammar` and `tigrammar`.
//! `oracle` is a brute-force language enumerator used to test the grammar
//! operations, and `cli` is the batch driver behind the `modal` binary.

pub mod cli;
pub mod diag;
pub mod frontend;
pub mod grammar;
pub mod oracle;
pub mod render;
pub mod scheduler;
pub mod synth;
pub mod tigrammar;

//! Neural-network architecture evaluation through probabilistic quantum
//! memory retrieval.
//!
//! * [`qsim`]: dense state-vector simulator (Hadamard, X, CNOT, Toffoli,
//!   phase, oracle gates and single-qubit measurement).
//! * [`pqm`]: probabilistic quantum memory with closed-form and circuit-level
//!   retrieval.
//! * [`mlp`]: single-hidden-layer classifier trained by full-batch gradient
//!   descent with a backtracking line search.
//! * [`dataio`]: CSV datasets, deterministic splits, synthetic generators.
//! * [`qnnae`]: the evaluation pipeline that turns many trained networks into
//!   performance vectors and scores them against a perfect-performance input.

pub mod dataio;
pub mod mlp;
pub mod pqm;
pub mod qnnae;
pub mod qsim;

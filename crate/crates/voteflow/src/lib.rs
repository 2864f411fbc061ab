//! Voting-based KV-cache eviction, flexible-product GEMV dataflow, and a
//! cycle-level performance model for single-batch LLM generation on a small
//! reconfigurable accelerator.
//!
//! The crate is organized around five subsystems:
//!
//! - [`numcore`]: reference and streaming numerical kernels (softmax,
//!   layernorm, online max/exp-sum and moment reductions).
//! - [`dataflow`]: GEMV under the inner- and outer-product interpretations,
//!   transpose-free attention kernels over a row-addressed `(l, d)` KV
//!   layout, and cycle-plan generation for flexible and fixed-tree engines.
//! - [`eviction`]: the voting-based cache eviction policy plus accumulated
//!   -score and sliding-window baselines behind one policy interface.
//! - [`attnbench`]: toy attention-trace generation, bias scenarios, and a
//!   replay harness that scores policies by retained attention mass.
//! - [`cyclesim`]: the cycle-level accelerator model (reconfigurable PE
//!   array, SFU scheduling, HBM bandwidth) with prefill/generation phase
//!   simulation and ablation sweeps.
//!
//! The `cli` module wires these into the `voteflow` binary; each major
//! capability also has a runnable program under `examples/`.

pub mod attnbench;
pub mod cli;
pub mod cyclesim;
pub mod dataflow;
pub mod error;
pub mod eviction;
pub mod numcore;

pub use error::{Error, Result};

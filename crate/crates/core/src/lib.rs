//! Core library for coupling population-based optimizers (GA, DE, PSO) to
//! blockchain network simulators.
//!
//! The pieces fit together like this: [`param`] defines the parameter/objective
//! vocabulary and turns optimizer candidates into full simulator argument
//! vectors; [`bridge`] abstracts simulators behind an [`bridge::Evaluator`]
//! contract (in-process or external child process); [`chainsim`] is the
//! built-in discrete-event blockchain simulator; [`executor`] evaluates a
//! population's candidates concurrently with deterministic seeding; and
//! [`optimizer`] runs the GA/DE/PSO loop with convergence detection.
//! [`warmstart`] persists good configurations and ranks them by interval
//! Jaccard similarity so later runs can start from them.

pub mod bridge;
pub mod chainsim;
pub mod executor;
pub mod optimizer;
pub mod param;
pub mod seeds;
pub mod warmstart;

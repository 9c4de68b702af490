//! Feasibility pump and annealed feasibility pump heuristics for mixed-integer
//! programs, with an LP solver, an MPS reader and a benchmark harness.
#![allow(clippy::needless_range_loop)]

pub mod afp;
pub mod bench;
pub mod engine;
pub mod fixtures;
pub mod fp;
pub mod lp;
pub mod model;
pub mod moves;
pub mod mps;
pub mod projection;
pub mod rng;
pub mod twostage;

//! Simulation of stochastic delay differential equations with the explicit
//! Euler scheme, exact method-of-steps references, sampled certification of
//! the coefficient hypotheses, and coupled-level convergence experiments.

pub mod brownian;
pub mod euler;
pub mod harness;
pub mod io;
pub mod model;
pub mod oracle;
pub mod probe;
pub mod rng;

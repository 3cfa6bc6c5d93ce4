//! Brownian motions on GL(N), their free large-N limits, and a trace
//! polynomial calculus for exact heat-kernel expectations.

pub mod error;
pub mod linalg;
pub mod sde;
pub mod oracle;
pub mod trace_poly;
pub mod free_process;
pub mod harness;

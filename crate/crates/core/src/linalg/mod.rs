//! Dense complex matrices, the orthonormal basis of u(N), and the basis
//! summation identities ("magic formulas").

mod basis;
mod expm;
mod matrix;
pub mod random;

pub use basis::{build_basis, magic_project, magic_sandwich, LieBasis, Sector};
pub use expm::{expm_into, ExpmPlan, ExpmWorkspace};
pub use matrix::{gemm, ComplexMatrix, Lu, C64, I, ONE, ZERO};

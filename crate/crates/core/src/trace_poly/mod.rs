//! Trace polynomials in words of several matrix arguments, the intertwining
//! operators for the Laplacian, and their exponentials.

mod intertwiner;
mod laplacian;
mod poly;
mod semigroup;
mod word;

pub use intertwiner::{build_intertwiner, IntertwinerAction, Terms};
pub use laplacian::{direct_laplacian, laplacian_check};
pub use poly::{embed_nc_monomial, embed_nc_polynomial, word_trace, TracePolynomial};
pub use semigroup::{
    closed_subspace, finite_n_moment, generator_parts, limit_moment, semigroup_apply, semigroup_apply_with, ExpMethod,
    Generator, GeneratorPart, SemigroupOptions, DEFAULT_DEGREE_CAP, DEFAULT_SUBSPACE_CAP, DENSE_MAX,
};
pub use word::{canonical_rotation, Letter, Monomial, Word};

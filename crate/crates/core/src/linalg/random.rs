use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::{ComplexMatrix, C64, I};

/// Matrix with iid standard complex Gaussian entries (E|z|^2 = 1).
pub fn ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * h, im * h)
    })
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(n, rng);
    let mut h = &g + &g.adjoint();
    h.scale_mut(C64::new(0.5, 0.0));
    h
}

/// exp(i H) for a random Hermitian H; Haar-distributed is not needed here.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    random_hermitian(n, rng).scale(I).expm().expect("finite Hermitian input")
}

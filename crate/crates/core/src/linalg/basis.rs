use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, C64, I, ZERO};
use crate::error::LinalgError;

/// Which half of the driver a basis sum belongs to: the anti-Hermitian
/// basis itself (`Plus`) or its Hermitian rotation `i * basis` (`Minus`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    Plus,
    Minus,
}

impl Sector {
    /// Sign picked up by a basis element under the adjoint.
    pub fn adjoint_sign(self) -> f64 {
        match self {
            Sector::Plus => -1.0,
            Sector::Minus => 1.0,
        }
    }

    /// Sign of the magic reductions in this sector.
    pub fn magic_sign(self) -> f64 {
        match self {
            Sector::Plus => -1.0,
            Sector::Minus => 1.0,
        }
    }
}

/// Orthonormal basis of the unitary Lie algebra u(n) under the inner
/// product -n Tr(xy).
#[derive(Clone, Debug)]
pub struct LieBasis {
    n: usize,
    elements: Vec<ComplexMatrix>,
}

impl LieBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Basis element as seen in `sector`.
    pub fn element(&self, k: usize, sector: Sector) -> ComplexMatrix {
        match sector {
            Sector::Plus => self.elements[k].clone(),
            Sector::Minus => self.elements[k].scale(I),
        }
    }

    /// Gram matrix under -n Tr(xy).
    pub fn gram(&self) -> Vec<Vec<C64>> {
        let n = self.n as f64;
        self.elements
            .iter()
            .map(|x| self.elements.iter().map(|y| -x.tr_product(y) * n * n).collect())
            .collect()
    }

    /// Every element conjugated by a fixed unitary; still orthonormal.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Result<LieBasis, LinalgError> {
        if u.n() != self.n {
            return Err(LinalgError::DimensionMismatch { left: u.n(), right: self.n });
        }
        Ok(LieBasis { n: self.n, elements: self.elements.iter().map(|x| x.conjugate_by(u)).collect() })
    }
}

/// The explicit basis: i E_jj / sqrt(n), (E_jk - E_kj)/sqrt(2n) and
/// i (E_jk + E_kj)/sqrt(2n) for j < k.
pub fn build_basis(n: usize) -> Result<LieBasis, LinalgError> {
    if n == 0 {
        return Err(LinalgError::ZeroDimension);
    }
    let nf = n as f64;
    let diag = C64::new(0.0, 1.0 / nf.sqrt());
    let off = 1.0 / (2.0 * nf).sqrt();
    let mut elements = Vec::with_capacity(n * n);
    for j in 0..n {
        let mut m = ComplexMatrix::zeros(n);
        m[(j, j)] = diag;
        elements.push(m);
    }
    for j in 0..n {
        for k in j + 1..n {
            let mut a = ComplexMatrix::zeros(n);
            a[(j, k)] = C64::new(off, 0.0);
            a[(k, j)] = C64::new(-off, 0.0);
            elements.push(a);
            let mut b = ComplexMatrix::zeros(n);
            b[(j, k)] = C64::new(0.0, off);
            b[(k, j)] = C64::new(0.0, off);
            elements.push(b);
        }
    }
    Ok(LieBasis { n, elements })
}

/// Sum over the basis of x A x in the given sector, by direct summation.
pub fn magic_sandwich(a: &ComplexMatrix, basis: &LieBasis, sector: Sector) -> Result<ComplexMatrix, LinalgError> {
    if a.n() != basis.n {
        return Err(LinalgError::DimensionMismatch { left: a.n(), right: basis.n });
    }
    let mut acc = ComplexMatrix::zeros(a.n());
    for x in &basis.elements {
        acc += &x.matmul(a).matmul(x);
    }
    // (i x) A (i x) = -x A x
    if sector == Sector::Minus {
        acc.scale_mut(C64::new(-1.0, 0.0));
    }
    Ok(acc)
}

/// Sum over the basis of tr(A x) x in the given sector, by direct summation.
pub fn magic_project(a: &ComplexMatrix, basis: &LieBasis, sector: Sector) -> Result<ComplexMatrix, LinalgError> {
    if a.n() != basis.n {
        return Err(LinalgError::DimensionMismatch { left: a.n(), right: basis.n });
    }
    let mut acc = ComplexMatrix::zeros(a.n());
    for x in &basis.elements {
        let c = a.tr_product(x);
        if c != ZERO {
            acc.axpy(c, x);
        }
    }
    if sector == Sector::Minus {
        acc.scale_mut(C64::new(-1.0, 0.0));
    }
    Ok(acc)
}

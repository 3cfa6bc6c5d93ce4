use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::LinalgError;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Dense square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<C64>,
}

/// Below this size a plain triple loop beats the blocked kernel.
const SMALL_GEMM: usize = 8;

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    /// Matrix unit E_jk (zero-based).
    pub fn unit(n: usize, j: usize, k: usize) -> Self {
        let mut m = Self::zeros(n);
        m[(j, k)] = ONE;
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn from_vec(n: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        if n == 0 {
            return Err(LinalgError::ZeroDimension);
        }
        if data.len() != n * n {
            return Err(LinalgError::DimensionMismatch { left: n * n, right: data.len() });
        }
        Ok(Self { n, data })
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn check_same_dim(&self, other: &Self) -> Result<(), LinalgError> {
        if self.n != other.n {
            return Err(LinalgError::DimensionMismatch { left: self.n, right: other.n });
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| self.data[j * n + i].conj())
    }

    /// Unnormalized trace.
    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }

    /// Normalized trace Tr/n.
    pub fn tr(&self) -> C64 {
        self.trace() / self.n as f64
    }

    /// Normalized trace of a product, without forming it.
    pub fn tr_product(&self, other: &Self) -> C64 {
        let n = self.n;
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        acc / n as f64
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&x| x * c).collect() }
    }

    pub fn scale_mut(&mut self, c: C64) {
        for x in &mut self.data {
            *x *= c;
        }
    }

    /// self += alpha * x
    pub fn axpy(&mut self, alpha: C64, x: &Self) {
        debug_assert_eq!(self.n, x.n);
        for (a, &b) in self.data.iter_mut().zip(&x.data) {
            *a += alpha * b;
        }
    }

    pub fn add_identity(&mut self, c: C64) {
        let n = self.n;
        for i in 0..n {
            self.data[i * n + i] += c;
        }
    }

    pub fn set_identity(&mut self) {
        self.data.fill(ZERO);
        self.add_identity(ONE);
    }

    pub fn copy_from(&mut self, other: &Self) {
        debug_assert_eq!(self.n, other.n);
        self.data.copy_from_slice(&other.data);
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        let mut out = Self::zeros(self.n);
        gemm(ONE, self, rhs, ZERO, &mut out);
        out
    }

    pub fn try_matmul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.check_same_dim(rhs)?;
        Ok(self.matmul(rhs))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self.data[i * n + j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.n, other.n);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.n;
        (0..n).all(|i| (i..n).all(|j| (self.data[i * n + j] - self.data[j * n + i].conj()).norm() <= tol))
    }

    pub fn is_antihermitian(&self, tol: f64) -> bool {
        let n = self.n;
        (0..n).all(|i| (i..n).all(|j| (self.data[i * n + j] + self.data[j * n + i].conj()).norm() <= tol))
    }

    /// max |U*U - I| entrywise.
    pub fn unitarity_defect(&self) -> f64 {
        let mut g = self.adjoint().matmul(self);
        g.add_identity(-ONE);
        g.max_abs()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// LU factorization with partial pivoting.
    pub fn lu(&self) -> Result<Lu, LinalgError> {
        if !self.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let n = self.n;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[i * n + k].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == 0.0 {
                return Err(LinalgError::Singular);
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                a[i * n + k] = f;
                for j in k + 1..n {
                    let akj = a[k * n + j];
                    a[i * n + j] -= f * akj;
                }
            }
        }
        Ok(Lu { n, lu: a, perm, sign })
    }

    pub fn inverse(&self) -> Result<Self, LinalgError> {
        let lu = self.lu()?;
        let n = self.n;
        let mut inv = Self::zeros(n);
        let mut col = vec![ZERO; n];
        for j in 0..n {
            col.fill(ZERO);
            col[j] = ONE;
            lu.solve_in_place(&mut col);
            for i in 0..n {
                inv.data[i * n + j] = col[i];
            }
        }
        if !inv.is_finite() {
            return Err(LinalgError::Singular);
        }
        Ok(inv)
    }

    pub fn determinant(&self) -> C64 {
        match self.lu() {
            Ok(lu) => lu.determinant(),
            Err(_) => ZERO,
        }
    }

    /// Conjugation U A U*.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.matmul(self).matmul(&u.adjoint())
    }
}

pub struct Lu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn determinant(&self) -> C64 {
        let n = self.n;
        (0..n).map(|i| self.lu[i * n + i]).product::<C64>() * self.sign
    }

    /// Solves A x = b, overwriting b with x.
    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.n;
        let pb: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        b.copy_from_slice(&pb);
        for i in 0..n {
            let mut acc = b[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * b[j];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..n {
                acc -= self.lu[i * n + j] * b[j];
            }
            b[i] = acc / self.lu[i * n + i];
        }
    }
}

/// c = alpha * a * b + beta * c.
pub fn gemm(alpha: C64, a: &ComplexMatrix, b: &ComplexMatrix, beta: C64, c: &mut ComplexMatrix) {
    let n = a.n;
    assert!(b.n == n && c.n == n, "gemm dimension mismatch");
    if n <= SMALL_GEMM {
        let mut buf = [ZERO; SMALL_GEMM * SMALL_GEMM];
        for i in 0..n {
            for j in 0..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc += a.data[i * n + k] * b.data[k * n + j];
                }
                buf[i * n + j] = acc;
            }
        }
        for (cij, &v) in c.data.iter_mut().zip(&buf[..n * n]) {
            *cij = if beta == ZERO { alpha * v } else { alpha * v + beta * *cij };
        }
        return;
    }
    let s = n as isize;
    // SAFETY: Complex64 is repr(C) {re, im}, layout-identical to [f64; 2];
    // all three buffers hold n*n elements with row stride n and column stride 1.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            n,
            n,
            n,
            [alpha.re, alpha.im],
            a.data.as_ptr() as *const [f64; 2],
            s,
            1,
            b.data.as_ptr() as *const [f64; 2],
            s,
            1,
            [beta.re, beta.im],
            c.data.as_mut_ptr() as *mut [f64; 2],
            s,
            1,
        );
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

impl Add<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.n, rhs.n);
        ComplexMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.n, rhs.n);
        ComplexMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Mul<C64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, c: C64) -> ComplexMatrix {
        self.scale(c)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale(-ONE)
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        self.axpy(ONE, rhs);
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        self.axpy(-ONE, rhs);
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.n, self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| {
                    let z = self.data[i * self.n + j];
                    format!("{:+.4e}{:+.4e}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> ComplexMatrix {
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ComplexMatrix::from_fn(n, |_, _| {
            let mut next = || {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            };
            C64::new(next(), next())
        })
    }

    fn naive(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
        let n = a.n();
        ComplexMatrix::from_fn(n, |i, j| (0..n).map(|k| a[(i, k)] * b[(k, j)]).sum())
    }

    #[test]
    fn gemm_matches_naive_small_and_large() {
        for &n in &[1, 3, 8, 9, 17, 40] {
            let a = sample(n, 1);
            let b = sample(n, 2);
            assert!(a.matmul(&b).max_abs_diff(&naive(&a, &b)) < 1e-12, "n={n}");
        }
    }

    #[test]
    fn gemm_accumulates_with_beta() {
        let a = sample(12, 3);
        let b = sample(12, 4);
        let mut c = sample(12, 5);
        let expect = &naive(&a, &b).scale(C64::new(2.0, 1.0)) + &c.scale(C64::new(0.5, 0.0));
        gemm(C64::new(2.0, 1.0), &a, &b, C64::new(0.5, 0.0), &mut c);
        assert!(c.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn inverse_and_determinant() {
        let a = sample(6, 7);
        let inv = a.inverse().unwrap();
        let mut p = a.matmul(&inv);
        p.add_identity(-ONE);
        assert!(p.max_abs() < 1e-12);
        let d = a.determinant() * inv.determinant();
        assert!((d - ONE).norm() < 1e-10);
    }

    #[test]
    fn singular_rejected() {
        let a = ComplexMatrix::unit(3, 0, 1);
        assert_eq!(a.inverse().unwrap_err(), LinalgError::Singular);
        assert_eq!(a.determinant(), ZERO);
    }

    #[test]
    fn trace_and_predicates() {
        let a = sample(5, 9);
        assert!((a.tr() * 5.0 - a.trace()).norm() < 1e-15);
        let h = &a + &a.adjoint();
        assert!(h.is_hermitian(1e-15));
        let k = &a - &a.adjoint();
        assert!(k.is_antihermitian(1e-15));
        assert!(ComplexMatrix::identity(4).is_unitary(0.0));
        assert!((a.tr_product(&h) - a.matmul(&h).tr()).norm() < 1e-14);
    }

    #[test]
    fn from_vec_checks_shape() {
        assert!(ComplexMatrix::from_vec(0, vec![]).is_err());
        assert!(ComplexMatrix::from_vec(2, vec![ONE; 3]).is_err());
        assert!(ComplexMatrix::from_vec(2, vec![ONE; 4]).is_ok());
    }
}

//! Matrix exponential by scaling and squaring around a truncated Taylor
//! series evaluated with the Paterson-Stockmeyer scheme.
//!
//! Degree and scaling are picked per call from the 1-norm so that the
//! truncation remainder of the scaled argument stays below unit roundoff.

use std::sync::OnceLock;

use super::matrix::{gemm, ComplexMatrix, C64, ONE, ZERO};
use crate::error::LinalgError;

/// (block size q, block count r): Taylor degree q*r at a cost of q+r-2 products.
const SCHEMES: [(usize, usize); 8] = [(2, 2), (3, 2), (3, 3), (4, 3), (4, 4), (5, 4), (5, 5), (6, 5)];

const MAX_SQUARINGS: u32 = 64;

fn thetas() -> &'static [f64; 8] {
    static CELL: OnceLock<[f64; 8]> = OnceLock::new();
    CELL.get_or_init(|| {
        let u = f64::EPSILON / 2.0;
        let mut out = [0.0; 8];
        for (slot, &(q, r)) in out.iter_mut().zip(SCHEMES.iter()) {
            let m = q * r;
            let tail = |x: f64| {
                let mut term = 1.0;
                for j in 1..=m {
                    term *= x / j as f64;
                }
                let mut sum = 0.0;
                for j in m + 1..m + 60 {
                    term *= x / j as f64;
                    sum += term;
                }
                sum
            };
            let (mut lo, mut hi) = (0.0, 20.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if tail(mid) <= u {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            *slot = lo;
        }
        out
    })
}

/// Chosen scheme: Taylor block layout plus the number of squarings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExpmPlan {
    pub q: usize,
    pub r: usize,
    pub squarings: u32,
}

impl ExpmPlan {
    pub fn degree(&self) -> usize {
        self.q * self.r
    }

    pub fn products(&self) -> usize {
        self.q + self.r - 2 + self.squarings as usize
    }

    pub fn for_norm(norm: f64) -> Self {
        let th = thetas();
        let mut best: Option<ExpmPlan> = None;
        for (&(q, r), &theta) in SCHEMES.iter().zip(th.iter()) {
            let squarings = if norm <= theta {
                0
            } else {
                ((norm / theta).log2().ceil() as u32).min(MAX_SQUARINGS)
            };
            let plan = ExpmPlan { q, r, squarings };
            best = match best {
                Some(b) if b.products() < plan.products() => Some(b),
                Some(b) if b.products() == plan.products() && b.squarings <= plan.squarings => Some(b),
                _ => Some(plan),
            };
        }
        best.expect("scheme table is nonempty")
    }
}

/// Scratch space reused across calls of the same dimension.
pub struct ExpmWorkspace {
    n: usize,
    powers: Vec<ComplexMatrix>,
    acc: ComplexMatrix,
    tmp: ComplexMatrix,
}

impl ExpmWorkspace {
    pub fn new(n: usize) -> Self {
        let q_max = SCHEMES.iter().map(|s| s.0).max().unwrap_or(2);
        Self {
            n,
            powers: (0..=q_max).map(|_| ComplexMatrix::zeros(n)).collect(),
            acc: ComplexMatrix::zeros(n),
            tmp: ComplexMatrix::zeros(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

fn inv_factorials(m: usize) -> Vec<f64> {
    let mut c = vec![1.0; m + 1];
    for j in 1..=m {
        c[j] = c[j - 1] / j as f64;
    }
    c
}

/// out = exp(a), using `ws` for intermediates.
pub fn expm_into(a: &ComplexMatrix, out: &mut ComplexMatrix, ws: &mut ExpmWorkspace) -> Result<ExpmPlan, LinalgError> {
    if a.n() != ws.n || out.n() != ws.n {
        return Err(LinalgError::DimensionMismatch { left: a.n(), right: ws.n });
    }
    let norm = a.one_norm();
    if !norm.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let plan = ExpmPlan::for_norm(norm);
    let (q, r) = (plan.q, plan.r);
    let coeff = inv_factorials(q * r);
    let scale = C64::new(0.5f64.powi(plan.squarings as i32), 0.0);

    let ExpmWorkspace { powers, acc, tmp, .. } = ws;
    powers[1].copy_from(a);
    powers[1].scale_mut(scale);
    for k in 2..=q {
        let (lo, hi) = powers.split_at_mut(k);
        gemm(ONE, &lo[k - 1], &lo[1], ZERO, &mut hi[0]);
    }

    // Horner in A^q over blocks B_k = sum_i c_{qk+i} A^i; the top block is c_{qr} I.
    let block = |k: usize, dst: &mut ComplexMatrix, powers: &[ComplexMatrix]| {
        dst.as_mut_slice().fill(ZERO);
        dst.add_identity(C64::new(coeff[q * k], 0.0));
        for i in 1..q {
            dst.axpy(C64::new(coeff[q * k + i], 0.0), &powers[i]);
        }
    };
    block(r - 1, acc, powers);
    acc.axpy(C64::new(coeff[q * r], 0.0), &powers[q]);
    for k in (0..r - 1).rev() {
        block(k, tmp, powers);
        gemm(ONE, acc, &powers[q], ONE, tmp);
        std::mem::swap(acc, tmp);
    }
    for _ in 0..plan.squarings {
        gemm(ONE, acc, acc, ZERO, tmp);
        std::mem::swap(acc, tmp);
    }
    out.copy_from(acc);
    Ok(plan)
}

impl ComplexMatrix {
    pub fn expm(&self) -> Result<ComplexMatrix, LinalgError> {
        let mut ws = ExpmWorkspace::new(self.n());
        let mut out = ComplexMatrix::zeros(self.n());
        expm_into(self, &mut out, &mut ws)?;
        Ok(out)
    }
}

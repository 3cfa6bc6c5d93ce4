//! Direct evaluation of the Laplacian of an evaluated trace polynomial by
//! explicit directional derivatives, for comparison with the intertwiners.

use super::intertwiner::IntertwinerAction;
use super::poly::TracePolynomial;
use super::word::Letter;
use crate::error::TracePolyError;
use crate::linalg::{build_basis, ComplexMatrix, Sector, C64, ONE, ZERO};

/// Value, first and second derivative of tr(word) along A_j -> A_j e^{h eta}.
fn word_jet(letters: &[Letter], j: u32, mats: &[ComplexMatrix], eta: &ComplexMatrix) -> (C64, C64, C64) {
    let eta2 = eta.matmul(eta);
    let factor = |l: &Letter, order: usize| -> ComplexMatrix {
        let a = &mats[l.index as usize - 1];
        let base = match order {
            0 => a.clone(),
            1 => a.matmul(eta),
            _ => a.matmul(&eta2),
        };
        if l.star {
            base.adjoint()
        } else {
            base
        }
    };
    let trace_with = |orders: &[usize]| -> C64 {
        let mut acc = factor(&letters[0], orders[0]);
        for (l, &o) in letters.iter().zip(orders).skip(1) {
            acc = acc.matmul(&factor(l, o));
        }
        acc.tr()
    };
    let m = letters.len();
    let slots: Vec<usize> = (0..m).filter(|&k| letters[k].index == j).collect();
    let mut orders = vec![0usize; m];
    let f0 = trace_with(&orders);
    let mut f1 = ZERO;
    let mut f2 = ZERO;
    for (a, &k) in slots.iter().enumerate() {
        orders[k] = 1;
        f1 += trace_with(&orders);
        orders[k] = 2;
        f2 += trace_with(&orders);
        orders[k] = 1;
        for &l in &slots[a + 1..] {
            orders[l] = 1;
            f2 += trace_with(&orders) * 2.0;
            orders[l] = 0;
        }
        orders[k] = 0;
    }
    (f0, f1, f2)
}

/// Direct Laplacian sum_eta (r d^2_eta + s d^2_{i eta}) of P_N at `mats`,
/// differentiating in the j-th argument.
pub fn direct_laplacian(p: &TracePolynomial, mats: &[ComplexMatrix], j: u32, r: f64, s: f64) -> Result<C64, TracePolyError> {
    let need = p.max_index().max(j) as usize;
    if need > mats.len() {
        return Err(TracePolyError::MissingIndex(need as u32));
    }
    let n = mats[0].n();
    for m in mats {
        m.check_same_dim(&mats[0])?;
    }
    let basis = build_basis(n)?;
    let mut total = ZERO;
    for (sector, weight) in [(Sector::Plus, r), (Sector::Minus, s)] {
        if weight == 0.0 {
            continue;
        }
        for k in 0..basis.len() {
            let eta = basis.element(k, sector);
            for (mono, c) in p.terms() {
                let jets: Vec<(C64, C64, C64)> = mono.factors().iter().map(|w| word_jet(w.letters(), j, mats, &eta)).collect();
                let mut d2 = ZERO;
                for i in 0..jets.len() {
                    let others: C64 = jets.iter().enumerate().filter(|(x, _)| *x != i).map(|(_, v)| v.0).product();
                    d2 += jets[i].2 * others;
                    for i2 in 0..jets.len() {
                        if i2 == i {
                            continue;
                        }
                        let rest: C64 =
                            jets.iter().enumerate().filter(|(x, _)| *x != i && *x != i2).map(|(_, v)| v.0).product();
                        d2 += jets[i].1 * jets[i2].1 * rest;
                    }
                }
                total += c * d2 * weight;
            }
        }
    }
    Ok(total)
}

/// (lhs, rhs): the Laplacian computed directly and through
/// [(D^j + L^j / N^2) P]_N.
pub fn laplacian_check(
    p: &TracePolynomial,
    mats: &[ComplexMatrix],
    j: u32,
    r: f64,
    s: f64,
    cyclic: bool,
) -> Result<(C64, C64), TracePolyError> {
    let lhs = direct_laplacian(p, mats, j, r, s)?;
    let op = IntertwinerAction::new(j, r, s)?.with_cyclic(cyclic);
    let src = if cyclic { p.cyclic_canonical() } else { p.clone() };
    let nn = (mats[0].n() * mats[0].n()) as f64;
    let image = op.apply_d(&src).add(&op.apply_l(&src).scale(ONE / nn));
    let rhs = image.evaluate(mats)?;
    Ok((lhs, rhs))
}

//! Single-index word moments of the free multiplicative Brownian motion by
//! exact integration of the triangular system over reachable subwords.
//!
//! Work with a = e^{(r-s)t/2} b and rescaled time u = (s + r) t. Each
//! f_eps(u) = tau(a^eps) then solves
//!   f' = kappa(eps) f + sum_{j<k} c_jk f_{eps1} f_{eps2},   f(0) = 1,
//! with c_jk = (s - r)/(s + r) when letters j and k agree and 1 otherwise.
//! Solutions are finite sums e^{m u} P_m(u) with integer rates m >= 0,
//! so the integration is closed-form.

use std::collections::{BTreeMap, HashMap};

/// sum_m e^{m u} P_m(u); polynomial coefficients in ascending order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExpPoly {
    terms: BTreeMap<u32, Vec<f64>>,
}

fn poly_add_scaled(dst: &mut Vec<f64>, src: &[f64], c: f64) {
    if dst.len() < src.len() {
        dst.resize(src.len(), 0.0);
    }
    for (d, s) in dst.iter_mut().zip(src) {
        *d += c * s;
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_eval(p: &[f64], u: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * u + c)
}

impl ExpPoly {
    pub fn exp_rate(m: u32) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(m, vec![1.0]);
        Self { terms }
    }

    fn add_term(&mut self, m: u32, p: &[f64], c: f64) {
        poly_add_scaled(self.terms.entry(m).or_default(), p, c);
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::default();
        for (ma, pa) in &self.terms {
            for (mb, pb) in &other.terms {
                out.add_term(ma + mb, &poly_mul(pa, pb), 1.0);
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &Self, c: f64) {
        for (m, p) in &other.terms {
            self.add_term(*m, p, c);
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.terms.iter().map(|(m, p)| (*m as f64 * u).exp() * poly_eval(p, u)).sum()
    }

    /// Solution of f' = kappa f + g, f(0) = 1.
    pub fn solve_linear(kappa: u32, g: &Self) -> Self {
        let mut out = Self::exp_rate(kappa);
        for (&m, p) in &g.terms {
            if m == kappa {
                // e^{kappa u} * antiderivative of P vanishing at 0
                let mut q = vec![0.0; p.len() + 1];
                for (i, c) in p.iter().enumerate() {
                    q[i + 1] = c / (i + 1) as f64;
                }
                out.add_term(kappa, &q, 1.0);
            } else {
                // int_0^u e^{d v} P(v) dv = e^{d u} Q(u) - Q(0), Q = sum_i (-1)^i P^(i) / d^{i+1}
                let d = m as f64 - kappa as f64;
                let mut q = vec![0.0; p.len()];
                let mut deriv = p.clone();
                let mut scale = 1.0 / d;
                let mut i = 0usize;
                while !deriv.is_empty() {
                    poly_add_scaled(&mut q, &deriv, scale);
                    deriv = deriv.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect();
                    scale *= -1.0 / d;
                    i += 1;
                }
                debug_assert!(i == p.len());
                out.add_term(m, &q, 1.0);
                out.add_term(kappa, &[q[0]], -1.0);
            }
        }
        out
    }
}

/// Lexicographically least rotation; tau is cyclic so this is a valid memo key.
pub fn min_rotation(w: &[bool]) -> Vec<bool> {
    let n = w.len();
    (0..n)
        .map(|k| w[k..].iter().chain(&w[..k]).copied().collect::<Vec<_>>())
        .min()
        .unwrap_or_default()
}

/// kappa(eps): wrap pair (star, plain) plus adjacent pairs (plain, star).
pub fn kappa(w: &[bool]) -> u32 {
    let n = w.len();
    if n == 0 {
        return 0;
    }
    let wrap = (n > 1 && w[0] && !w[n - 1]) as u32;
    wrap + w.windows(2).filter(|p| !p[0] && p[1]).count() as u32
}

/// Subword pairs (eps1, eps2, letters_equal) for j < k, skipping the two
/// cases where one trace is trivial. `true` marks a starred letter.
pub fn split_pairs(w: &[bool]) -> Vec<(Vec<bool>, Vec<bool>, bool)> {
    // x' keeps a plain letter, x'' keeps a starred letter
    let prime = |x: bool| (!x).then_some(false);
    let dprime = |x: bool| x.then_some(true);
    let n = w.len();
    let mut out = Vec::new();
    for j in 0..n {
        for k in j + 1..n {
            let mut e1: Vec<bool> = dprime(w[j]).into_iter().collect();
            e1.extend_from_slice(&w[j + 1..k]);
            e1.extend(prime(w[k]));
            let mut e2: Vec<bool> = w[..j].to_vec();
            e2.extend(prime(w[j]));
            e2.extend(dprime(w[k]));
            e2.extend_from_slice(&w[k + 1..]);
            if e1.is_empty() || e2.is_empty() {
                continue;
            }
            out.push((e1, e2, w[j] == w[k]));
        }
    }
    out
}

/// Memoized solver for fixed c_minus = (s - r)/(s + r).
pub struct WordSolver {
    c_minus: f64,
    memo: HashMap<Vec<bool>, ExpPoly>,
}

impl WordSolver {
    pub fn new(c_minus: f64) -> Self {
        Self { c_minus, memo: HashMap::new() }
    }

    pub fn solve(&mut self, w: &[bool]) -> ExpPoly {
        if w.is_empty() {
            return ExpPoly::exp_rate(0);
        }
        let key = min_rotation(w);
        if let Some(f) = self.memo.get(&key) {
            return f.clone();
        }
        let mut g = ExpPoly::default();
        for (e1, e2, equal) in split_pairs(&key) {
            let c = if equal { self.c_minus } else { 1.0 };
            if c == 0.0 {
                continue;
            }
            let f1 = self.solve(&e1);
            let f2 = self.solve(&e2);
            g.add_scaled(&f1.mul(&f2), c);
        }
        let f = ExpPoly::solve_linear(kappa(&key), &g);
        self.memo.insert(key, f.clone());
        f
    }
}

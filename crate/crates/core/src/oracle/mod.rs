//! Closed forms and ODE routes for the single-time moments of the free
//! multiplicative (r, s)-Brownian motion b_t.

mod dd;
mod word_ode;

pub use dd::DoubleDouble;
pub use word_ode::{kappa, min_rotation, split_pairs, ExpPoly, WordSolver};

use serde::{Deserialize, Serialize};

use crate::error::OracleError;

/// Step of the fixed-step RK4 integrator for the rho system.
pub const RHO_STEP: f64 = 1e-4;

/// Above this value of n t (t > 0) `nu` switches from the alternating
/// closed form to the ODE route.
pub const NU_ODE_THRESHOLD: f64 = 30.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub r: f64,
    pub s: f64,
    pub t: f64,
}

impl EvalPoint {
    pub fn new(r: f64, s: f64, t: f64) -> Result<Self, OracleError> {
        let p = Self { r, s, t };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if [self.r, self.s, self.t].iter().all(|x| x.is_finite() && *x >= 0.0) {
            Ok(())
        } else {
            Err(OracleError::InvalidArgument(format!("r, s, t must be finite and >= 0, got {self:?}")))
        }
    }
}

/// rho_1..rho_{n_max} on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentVector {
    pub n_max: usize,
    pub times: Vec<f64>,
    /// values[i][n - 1] = rho_n(times[i])
    pub values: Vec<Vec<f64>>,
}

impl MomentVector {
    pub fn rho(&self, n: usize, time_index: usize) -> f64 {
        self.values[time_index][n - 1]
    }
}

/// Coefficients of rho_n(t) = sum_k c_k t^k in double-double.
fn rho_coefficients(n: u64) -> Vec<DoubleDouble> {
    let nf = n as f64;
    let mut c = Vec::with_capacity(n as usize);
    // c_0 = n^{-1} C(n, 1) = 1; c_{k+1} / c_k = -n (n - k - 1) / ((k + 1)(k + 2))
    let mut ck = DoubleDouble::from_f64(1.0);
    for k in 0..n {
        c.push(ck);
        if k + 1 < n {
            ck = ck.mul_f64(-nf * (n - k - 1) as f64).div_f64(((k + 1) * (k + 2)) as f64);
        }
    }
    c
}

/// rho_n(t) = e^{n t / 2} nu_n(t) by the closed form, Horner in double-double.
pub fn rho_closed_form(n: i64, t: f64) -> f64 {
    let n = n.unsigned_abs();
    if n == 0 {
        return 1.0;
    }
    rho_coefficients(n)
        .iter()
        .rev()
        .fold(DoubleDouble::ZERO, |acc, c| acc.mul_f64(t).add(*c))
        .to_f64()
}

fn scale_by_exp(n: i64, t: f64, rho: f64) -> Result<f64, OracleError> {
    let e = -(n.unsigned_abs() as f64) * t / 2.0;
    // split the exponential to survive rho near overflow
    let v = if e > 700.0 { rho * (e / 2.0).exp() * (e / 2.0).exp() } else { rho * e.exp() };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(OracleError::Overflow { n, t })
    }
}

/// nu_n(t) from the closed form alone (no ODE fallback).
pub fn nu_closed_form(n: i64, t: f64) -> Result<f64, OracleError> {
    if n == 0 {
        return Ok(1.0);
    }
    if !t.is_finite() {
        return Err(OracleError::InvalidArgument(format!("t = {t}")));
    }
    scale_by_exp(n, t, rho_closed_form(n, t))
}

/// nu_n(t); n may be negative (|n| is used) and t any real.
pub fn nu(n: i64, t: f64) -> Result<f64, OracleError> {
    if n == 0 {
        return Ok(1.0);
    }
    if !t.is_finite() {
        return Err(OracleError::InvalidArgument(format!("t = {t}")));
    }
    let m = n.unsigned_abs();
    if t > 0.0 && m as f64 * t > NU_ODE_THRESHOLD {
        let rho = rho_rk4(m as usize, t);
        return scale_by_exp(n, t, rho[m as usize - 1]);
    }
    nu_closed_form(n, t)
}

fn rho_rhs(y: &[f64], out: &mut [f64]) {
    for n in 1..=y.len() {
        let mut acc = 0.0;
        for k in 1..n {
            acc += k as f64 * y[k - 1] * y[n - k - 1];
        }
        out[n - 1] = -acc;
    }
}

fn rk4_advance(y: &mut [f64], span: f64) {
    if span == 0.0 {
        return;
    }
    let steps = (span.abs() / RHO_STEP * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let m = y.len();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    for _ in 0..steps {
        rho_rhs(y, &mut k1);
        for i in 0..m {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        rho_rhs(&tmp, &mut k2);
        for i in 0..m {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        rho_rhs(&tmp, &mut k3);
        for i in 0..m {
            tmp[i] = y[i] + h * k3[i];
        }
        rho_rhs(&tmp, &mut k4);
        for i in 0..m {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

fn rho_rk4(n_max: usize, t: f64) -> Vec<f64> {
    let mut y = vec![1.0; n_max];
    rk4_advance(&mut y, t);
    y
}

/// Solves rho_n' = -sum_{k<n} k rho_k rho_{n-k}, rho_n(0) = 1, by fixed-step
/// RK4. Grid points may be in any order and of either sign.
pub fn rho_ode(n_max: usize, t_grid: &[f64]) -> Result<MomentVector, OracleError> {
    if n_max == 0 {
        return Err(OracleError::InvalidArgument("n_max must be at least 1".into()));
    }
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(OracleError::InvalidArgument("non-finite time".into()));
    }
    let mut values = vec![Vec::new(); t_grid.len()];
    for sign in [1.0, -1.0] {
        let mut idx: Vec<usize> = (0..t_grid.len()).filter(|&i| (t_grid[i] * sign) >= 0.0).collect();
        idx.sort_by(|&a, &b| (t_grid[a] * sign).total_cmp(&(t_grid[b] * sign)));
        let mut y = vec![1.0; n_max];
        let mut at = 0.0;
        for i in idx {
            if !values[i].is_empty() {
                continue;
            }
            rk4_advance(&mut y, t_grid[i] - at);
            at = t_grid[i];
            values[i] = y.clone();
        }
    }
    Ok(MomentVector { n_max, times: t_grid.to_vec(), values })
}

/// tau(b^n) = nu_n((r - s) t).
pub fn moment_b_power(p: &EvalPoint, n: i64) -> Result<f64, OracleError> {
    p.validate()?;
    nu(n, (p.r - p.s) * p.t)
}

/// tau((b b*)^n) = nu_n(-4 s t).
pub fn moment_bbstar_power(p: &EvalPoint, n: i64) -> Result<f64, OracleError> {
    p.validate()?;
    nu(n, -4.0 * p.s * p.t)
}

/// tau(b^2 b*^2) = e^{4st} + 4st (1 + st) e^{(3s - r)t}.
pub fn moment_b2b2star(p: &EvalPoint) -> Result<f64, OracleError> {
    p.validate()?;
    let st = p.s * p.t;
    Ok((4.0 * st).exp() + 4.0 * st * (1.0 + st) * ((3.0 * p.s - p.r) * p.t).exp())
}

/// tau(b^2 b*) = e^{-3(r - s)t/2} (1 + 2st) e^{(s + r)t}.
pub fn moment_b2bstar(p: &EvalPoint) -> Result<f64, OracleError> {
    p.validate()?;
    let (r, s, t) = (p.r, p.s, p.t);
    Ok((-1.5 * (r - s) * t).exp() * (1.0 + 2.0 * s * t) * ((s + r) * t).exp())
}

/// e^x - 1 - x without cancellation.
fn expm1_minus_x(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // |x| < 0.1: twenty terms are far below roundoff
        let mut term = x * x / 2.0;
        let mut sum = 0.0f64;
        for k in 3..23 {
            sum += term;
            term *= x / k as f64;
        }
        sum
    } else {
        x.exp_m1() - x
    }
}

/// tau([b, b*]^2) = 8st e^{3st}(e^{st} - (1 + st) e^{-rt}), arranged so both
/// summands are nonnegative.
pub fn nonnormality_witness(p: &EvalPoint) -> Result<f64, OracleError> {
    p.validate()?;
    let (r, s, t) = (p.r, p.s, p.t);
    let st = s * t;
    let bracket = expm1_minus_x(st) + (1.0 + st) * (-(-r * t).exp_m1());
    Ok(8.0 * st * (3.0 * st).exp() * bracket)
}

/// tau(b_t^{eps_1} ... b_t^{eps_n}) for a single-index word given by its
/// star flags (`true` = starred).
pub fn word_moment_recursive(stars: &[bool], p: &EvalPoint) -> Result<f64, OracleError> {
    p.validate()?;
    if stars.is_empty() {
        return Ok(1.0);
    }
    let sigma = p.s + p.r;
    if sigma == 0.0 {
        return Ok(1.0);
    }
    let mut solver = WordSolver::new((p.s - p.r) / sigma);
    Ok(word_moment_with(&mut solver, stars, p))
}

/// Same as `word_moment_recursive` with a caller-held memo; the solver must
/// have been built for the same (r, s).
pub fn word_moment_with(solver: &mut WordSolver, stars: &[bool], p: &EvalPoint) -> f64 {
    if stars.is_empty() {
        return 1.0;
    }
    let sigma = p.s + p.r;
    if sigma == 0.0 {
        return 1.0;
    }
    let f = solver.solve(stars);
    let n = stars.len() as f64;
    (-0.5 * n * (p.r - p.s) * p.t).exp() * f.eval(sigma * p.t)
}

/// Parses "1 1 * *" / "11**" style star patterns.
pub fn parse_star_pattern(spec: &str) -> Result<Vec<bool>, OracleError> {
    spec.chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c {
            '1' => Ok(false),
            '*' => Ok(true),
            _ => Err(OracleError::InvalidArgument(format!("bad letter {c:?} in {spec:?}"))),
        })
        .collect()
}

//! Self-checks over the analytic routes, grouped by module.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::free_process::{increment_rewrite, ProcessEngine, TimedLetter, TimedWord, ROUTE_TOLERANCE};
use crate::linalg::random::ginibre;
use crate::linalg::{build_basis, magic_project, magic_sandwich, ComplexMatrix, Sector, C64};
use crate::oracle::{
    moment_b2b2star, moment_b_power, moment_bbstar_power, nu_closed_form, rho_ode, word_moment_recursive, EvalPoint,
};
use crate::sde::path_rng;
use crate::trace_poly::{laplacian_check, limit_moment, Letter, Monomial, TracePolynomial, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyLevel {
    Fast,
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub module: String,
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    /// Inputs of the worst case.
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {}/{}: {} cases, max error {:.3e} (tol {:.0e}), {:.1} s; worst: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.module,
            self.name,
            self.cases,
            self.max_error,
            self.tolerance,
            self.seconds,
            self.detail
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub level: VerifyLevel,
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Running maximum of an error with the inputs that produced it.
struct Worst {
    cases: usize,
    err: f64,
    detail: String,
}

impl Worst {
    fn new() -> Self {
        Self { cases: 0, err: 0.0, detail: String::new() }
    }

    fn record(&mut self, err: f64, detail: impl FnOnce() -> String) {
        self.cases += 1;
        // NaN counts as worst
        if !(err <= self.err) {
            self.err = err;
            self.detail = detail();
        }
    }

    fn finish(self, module: &str, name: &str, tol: f64, start: Instant) -> CheckOutcome {
        CheckOutcome {
            module: module.into(),
            name: name.into(),
            passed: self.err <= tol,
            cases: self.cases,
            max_error: self.err,
            tolerance: tol,
            detail: self.detail,
            seconds: start.elapsed().as_secs_f64(),
        }
    }
}

/// |a - b| / max(1, |b|)
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Random polynomial with up to four terms of trace degree 1..=max_degree
/// in indices 1..=indices.
pub fn random_trace_polynomial<R: Rng + ?Sized>(rng: &mut R, max_degree: usize, indices: u32) -> TracePolynomial {
    let mut p = TracePolynomial::zero();
    let terms = rng.random_range(1..=4);
    for _ in 0..terms {
        let degree = rng.random_range(1..=max_degree);
        let mut letters: Vec<Letter> =
            (0..degree).map(|_| Letter::new(rng.random_range(1..=indices), rng.random_bool(0.5))).collect();
        let mut words = Vec::new();
        while !letters.is_empty() {
            let take = rng.random_range(1..=letters.len());
            let rest = letters.split_off(take);
            words.push(Word::new(letters).expect("nonempty, positive indices"));
            letters = rest;
        }
        let c = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        p.add_term(Monomial::from_words(words), c);
    }
    p
}

pub fn magic_suite(level: VerifyLevel) -> Result<Vec<CheckOutcome>, HarnessError> {
    let start = Instant::now();
    let (n_max, reps) = match level {
        VerifyLevel::Fast => (6, 10),
        VerifyLevel::Full => (16, 100),
    };
    let mut same = Worst::new();
    let mut cross = Worst::new();
    let mut rng = path_rng(0x6d61_6769, 0);
    for n in 2..=n_max {
        let basis = build_basis(n)?;
        for k in 0..reps {
            let a = ginibre(n, &mut rng);
            for sector in [Sector::Plus, Sector::Minus] {
                let sign = sector.magic_sign();
                let mut expect = ComplexMatrix::identity(n);
                expect.scale_mut(a.tr() * sign);
                let got = magic_sandwich(&a, &basis, sector)?;
                same.record(got.max_abs_diff(&expect), || format!("N={n} sample {k} {sector:?}"));
                let expect = a.scale(C64::new(sign / (n * n) as f64, 0.0));
                let got = magic_project(&a, &basis, sector)?;
                cross.record(got.max_abs_diff(&expect), || format!("N={n} sample {k} {sector:?}"));
            }
        }
    }
    Ok(vec![
        same.finish("linalg_core", "magic_same_trace", 1e-12, start),
        cross.finish("linalg_core", "magic_cross_trace", 1e-12, start),
    ])
}

pub fn laplacian_suite(level: VerifyLevel) -> Result<CheckOutcome, HarnessError> {
    let start = Instant::now();
    let polys = match level {
        VerifyLevel::Fast => 10,
        VerifyLevel::Full => 50,
    };
    let mut worst = Worst::new();
    let mut rng = path_rng(0x6c61_706c, 0);
    for k in 0..polys {
        let p = random_trace_polynomial(&mut rng, 4, 2);
        for n in [2, 3, 4] {
            let mats = vec![ginibre(n, &mut rng), ginibre(n, &mut rng)];
            let j = rng.random_range(1..=2);
            for (r, s) in [(1.0, 0.0), (0.5, 0.5), (1.0, 2.0)] {
                for cyclic in [false, true] {
                    let (lhs, rhs) = laplacian_check(&p, &mats, j, r, s, cyclic)?;
                    let err = (lhs - rhs).norm() / lhs.norm().max(1.0);
                    worst.record(err, || format!("poly {k} N={n} j={j} r={r} s={s} cyclic={cyclic}: {p}"));
                }
            }
        }
    }
    Ok(worst.finish("trace_poly", "intertwining", 1e-10, start))
}

pub fn rho_nu_suite(level: VerifyLevel) -> Result<CheckOutcome, HarnessError> {
    let start = Instant::now();
    let (n_max, step) = match level {
        VerifyLevel::Fast => (8, 0.5),
        VerifyLevel::Full => (12, 0.1),
    };
    let grid: Vec<f64> = (0..=(4.0f64 / step).round() as usize).map(|i| i as f64 * step).collect();
    let mv = rho_ode(n_max, &grid)?;
    let mut worst = Worst::new();
    for n in 1..=n_max {
        for (i, &t) in grid.iter().enumerate() {
            let closed = (n as f64 * t / 2.0).exp() * nu_closed_form(n as i64, t)?;
            worst.record(rel_err(mv.rho(n, i), closed), || format!("n={n} t={t}"));
        }
    }
    Ok(worst.finish("moment_oracle", "rho_vs_nu", 1e-9, start))
}

fn grid_points(level: VerifyLevel) -> Vec<f64> {
    match level {
        VerifyLevel::Fast => vec![0.0, 1.0, 2.0],
        VerifyLevel::Full => vec![0.0, 0.5, 1.0, 1.5, 2.0],
    }
}

/// All star patterns of the given length.
pub fn star_patterns(len: usize) -> impl Iterator<Item = Vec<bool>> {
    (0..1usize << len).map(move |code| (0..len).map(|i| code >> i & 1 == 1).collect())
}

pub fn closed_form_suite(level: VerifyLevel) -> Result<Vec<CheckOutcome>, HarnessError> {
    let start = Instant::now();
    let max_len = match level {
        VerifyLevel::Fast => 4,
        VerifyLevel::Full => 6,
    };
    let pts = grid_points(level);
    let mut powers = Worst::new();
    let mut m3 = Worst::new();
    let mut words = Worst::new();
    let single = |stars: &[bool]| Word::single_index(1, stars).expect("nonempty");
    for &r in &pts {
        for &s in &pts {
            for &t in &pts {
                let p = EvalPoint::new(r, s, t)?;
                for n in 1..=6usize {
                    let b = limit_moment(&single(&vec![false; n]), &[t], r, s)?.re;
                    powers.record(rel_err(b, moment_b_power(&p, n as i64)?), || format!("b^{n} r={r} s={s} t={t}"));
                    let alt: Vec<bool> = (0..2 * n).map(|i| i % 2 == 1).collect();
                    let bb = limit_moment(&single(&alt), &[t], r, s)?.re;
                    powers.record(rel_err(bb, moment_bbstar_power(&p, n as i64)?), || {
                        format!("(bb*)^{n} r={r} s={s} t={t}")
                    });
                }
                let v = limit_moment(&single(&[false, false, true, true]), &[t], r, s)?.re;
                m3.record(rel_err(v, moment_b2b2star(&p)?), || format!("r={r} s={s} t={t}"));
                for len in 1..=max_len {
                    for stars in star_patterns(len) {
                        let a = word_moment_recursive(&stars, &p)?;
                        let b = limit_moment(&single(&stars), &[t], r, s)?.re;
                        words.record(rel_err(a, b), || format!("{stars:?} r={r} s={s} t={t}"));
                    }
                }
            }
        }
    }
    Ok(vec![
        powers.finish("trace_poly", "power_moments", 1e-8, start),
        m3.finish("trace_poly", "b2b2star", 1e-8, start),
        words.finish("moment_oracle", "word_recursion_vs_semigroup", 1e-8, start),
    ])
}

/// Every timed word of length 1..=max_len over the given times.
pub fn timed_words(times: &[f64], max_len: usize) -> Vec<TimedWord> {
    let alphabet: Vec<TimedLetter> =
        times.iter().flat_map(|&time| [false, true].map(|star| TimedLetter { time, star })).collect();
    let mut out = Vec::new();
    let mut current: Vec<Vec<TimedLetter>> = vec![Vec::new()];
    for _ in 0..max_len {
        current = current
            .iter()
            .flat_map(|w| alphabet.iter().map(move |l| w.iter().copied().chain([*l]).collect::<Vec<_>>()))
            .collect();
        out.extend(current.iter().map(|w| TimedWord { letters: w.clone() }));
    }
    out
}

pub fn routes_suite(level: VerifyLevel) -> Result<CheckOutcome, HarnessError> {
    let start = Instant::now();
    let max_len = match level {
        VerifyLevel::Fast => 3,
        VerifyLevel::Full => 5,
    };
    let words = timed_words(&[0.4, 1.0, 1.7], max_len);
    let mut worst = Worst::new();
    for (r, s) in [(1.0, 0.0), (0.5, 0.5), (2.0, 1.0)] {
        let mut engine = ProcessEngine::new(r, s)?;
        for w in &words {
            let inc = increment_rewrite(w);
            let a = engine.route_a(&inc)?;
            let b = engine.route_b(&inc);
            worst.record((a - b).norm() / a.norm().max(1.0), || format!("{w} r={r} s={s}: {a} vs {b}"));
        }
    }
    Ok(worst.finish("free_process", "route_a_vs_route_b", ROUTE_TOLERANCE, start))
}

pub fn verify(level: VerifyLevel) -> Result<VerifyReport, HarnessError> {
    let mut checks = magic_suite(level)?;
    checks.push(laplacian_suite(level)?);
    checks.push(rho_nu_suite(level)?);
    checks.extend(closed_form_suite(level)?);
    checks.push(routes_suite(level)?);
    for c in &checks {
        log::info!("{c}");
    }
    Ok(VerifyReport { level, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace_poly::{direct_laplacian, IntertwinerAction};

    #[test]
    fn random_polys_respect_bounds() {
        let mut rng = path_rng(1, 1);
        for _ in 0..50 {
            let p = random_trace_polynomial(&mut rng, 4, 2);
            assert!(p.degree() <= 4 && p.max_index() <= 2 && !p.is_empty());
        }
    }

    #[test]
    fn timed_word_count() {
        assert_eq!(timed_words(&[1.0, 2.0], 2).len(), 4 + 16);
    }

    #[test]
    fn corrupted_operator_is_caught() {
        // swapping the sector weights flips a sign in every starred term
        let mut rng = path_rng(2, 0);
        let mats = vec![ginibre(3, &mut rng)];
        let p = TracePolynomial::variable(Word::parse("1 1 1*").unwrap());
        let lhs = direct_laplacian(&p, &mats, 1, 0.3, 1.2).unwrap();
        let bad = IntertwinerAction::new(1, 1.2, 0.3).unwrap();
        let rhs = bad.apply_d(&p).add(&bad.apply_l(&p).scale(C64::new(1.0 / 9.0, 0.0))).evaluate(&mats).unwrap();
        assert!((lhs - rhs).norm() > 1e-3 * lhs.norm());
    }

    #[test]
    fn fast_verify_passes() {
        let rep = verify(VerifyLevel::Fast).unwrap();
        for c in &rep.checks {
            assert!(c.passed, "{c}");
        }
    }
}

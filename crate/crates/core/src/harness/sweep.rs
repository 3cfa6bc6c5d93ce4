use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::experiment::{run_mc, CompareTo, Experiment, MomentReport};
use crate::error::HarnessError;
use crate::free_process::ProcessEngine;

/// Least-squares line y = intercept + slope x with a 95% interval on the slope.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SlopeFit {
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.slope >= lo && self.slope <= hi
    }
}

/// OLS fit; needs at least 3 points for an interval.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<SlopeFit> {
    let n = x.len();
    if n < 3 || n != y.len() || x.iter().chain(y).any(|v| !v.is_finite()) {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let dof = (n - 2) as f64;
    let slope_se = (rss / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).ok()?.inverse_cdf(0.975);
    Some(SlopeFit { slope, intercept, slope_se, ci_low: slope - t * slope_se, ci_high: slope + t * slope_se })
}

/// Fit of log y against log x; `None` if some y is not positive.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Option<SlopeFit> {
    if y.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordSweep {
    pub word: String,
    pub limit: f64,
    pub variances: Vec<f64>,
    pub deviations: Vec<f64>,
    pub variance_fit: Option<SlopeFit>,
    pub deviation_fit: Option<SlopeFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    #[serde(rename = "Ns")]
    pub ns: Vec<usize>,
    pub words: Vec<WordSweep>,
    pub reports: Vec<MomentReport>,
}

/// Runs the experiment at each dimension with the same seed and fits
/// Var[tr] and |E tr - limit| against N on log-log axes.
pub fn scaling_sweep(base: &Experiment, ns: &[usize]) -> Result<SweepResult, HarnessError> {
    if ns.len() < 3 {
        return Err(HarnessError::TooFewDimensions(ns.len()));
    }
    let mut engine = ProcessEngine::new(base.sim.r, base.sim.s)?;
    let limits = base.words.iter().map(|w| engine.moment(w).map(|m| m.value)).collect::<Result<Vec<_>, _>>()?;
    let mut reports = Vec::with_capacity(ns.len());
    for &n in ns {
        let mut exp = base.clone();
        exp.sim.n = n;
        exp.compare_to = CompareTo::None;
        let mut rep = run_mc(&exp)?;
        for (w, l) in rep.words.iter_mut().zip(&limits) {
            w.reference = Some(*l);
            w.z = Some(if w.se > 0.0 { (w.mean - l).norm() / w.se } else { 0.0 });
        }
        log::info!("N = {n}: {} paths in {:.1} s", rep.paths, rep.wall_time_s);
        reports.push(rep);
    }
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let words = base
        .words
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let variances: Vec<f64> = reports.iter().map(|r| r.covariance[i][i].re).collect();
            let deviations: Vec<f64> = reports.iter().map(|r| (r.words[i].mean - limits[i]).norm()).collect();
            WordSweep {
                word: w.to_string(),
                limit: limits[i].re,
                variance_fit: fit_loglog(&x, &variances),
                deviation_fit: fit_loglog(&x, &deviations),
                variances,
                deviations,
            }
        })
        .collect();
    Ok(SweepResult { ns: ns.to_vec(), words, reports })
}

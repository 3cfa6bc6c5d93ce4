use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, SdeError};
use crate::free_process::{increment_rewrite, ProcessEngine, TimedWord};
use crate::linalg::{ComplexMatrix, C64, ONE, ZERO};
use crate::sde::{path_rng, simulate_samples, Scheme, SimConfig};
use crate::trace_poly::{finite_n_moment, Word};

/// Largest tolerated fraction of blown-up paths.
pub const MAX_BLOWUP_FRACTION: f64 = 1e-3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompareTo {
    Limit,
    #[serde(rename = "finiteN")]
    FiniteN,
    #[default]
    None,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub sim: SimConfig,
    pub words: Vec<TimedWord>,
    #[serde(default)]
    pub compare_to: CompareTo,
    #[serde(default)]
    pub outputs: Outputs,
}

impl Experiment {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.sim.validate()?;
        for w in &self.words {
            for l in &w.letters {
                if l.time != 0.0 && !self.sim.times.contains(&l.time) {
                    return Err(HarnessError::InvalidExperiment(format!(
                        "word {w} uses time {} which is not sampled",
                        l.time
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordStats {
    pub word: TimedWord,
    pub mean: C64,
    /// sqrt(sample variance / paths)
    pub se: f64,
    pub reference: Option<C64>,
    pub z: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub r: f64,
    pub s: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub scheme: Scheme,
    pub blowups: usize,
    pub wall_time_s: f64,
    pub words: Vec<WordStats>,
    /// covariance[i][j] = E(F_i conj F_j) - E F_i E conj F_j
    pub covariance: Vec<Vec<C64>>,
}

/// Thread pool honoring GLBROWN_THREADS.
pub fn thread_pool() -> Result<rayon::ThreadPool, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("GLBROWN_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| HarnessError::InvalidExperiment(format!("GLBROWN_THREADS={v:?} is not a count")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| HarnessError::ThreadPool(e.to_string()))
}

/// Normalized trace of the timed word on one sampled path.
pub fn word_on_path(word: &TimedWord, times: &[f64], samples: &[ComplexMatrix], adjoints: &[ComplexMatrix]) -> C64 {
    let mut factors = word.letters.iter().filter(|l| l.time != 0.0).map(|l| {
        let k = times.iter().position(|&t| t == l.time).expect("validated time");
        if l.star {
            &adjoints[k]
        } else {
            &samples[k]
        }
    });
    let Some(first) = factors.next() else {
        return ONE;
    };
    let rest: Vec<&ComplexMatrix> = factors.collect();
    match rest.split_last() {
        None => first.tr(),
        Some((last, middle)) => {
            let mut acc = first.clone();
            for m in middle {
                acc = acc.matmul(m);
            }
            acc.tr_product(last)
        }
    }
}

/// Analytic reference for one word.
pub fn reference_value(word: &TimedWord, sim: &SimConfig, compare_to: CompareTo) -> Result<Option<C64>, HarnessError> {
    match compare_to {
        CompareTo::None => Ok(None),
        CompareTo::Limit => Ok(Some(ProcessEngine::new(sim.r, sim.s)?.moment(word)?.value)),
        CompareTo::FiniteN => {
            let inc = increment_rewrite(word);
            if inc.letters.is_empty() {
                return Ok(Some(ONE));
            }
            let w = Word::new(inc.letters).map_err(crate::error::FreeProcessError::from)?;
            Ok(Some(finite_n_moment(&w, &inc.gaps, sim.r, sim.s, sim.n)?))
        }
    }
}

fn simulate_one(exp: &Experiment, index: usize) -> Result<Option<Vec<C64>>, SdeError> {
    let mut rng = path_rng(exp.sim.seed, index as u64);
    let path = match simulate_samples(&exp.sim, &mut rng) {
        Ok(p) => p,
        Err(SdeError::BlowUp { time }) => {
            log::debug!("path {index} blew up at t = {time}");
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    let samples: Vec<ComplexMatrix> = path.samples.into_iter().map(|(_, m)| m).collect();
    let adjoints: Vec<ComplexMatrix> = samples.iter().map(ComplexMatrix::adjoint).collect();
    Ok(Some(exp.words.iter().map(|w| word_on_path(w, &exp.sim.times, &samples, &adjoints)).collect()))
}

/// Per-path word values in path order; `None` marks a blown-up path.
pub fn simulate_values(exp: &Experiment) -> Result<Vec<Option<Vec<C64>>>, HarnessError> {
    exp.validate()?;
    let pool = thread_pool()?;
    let out: Result<Vec<_>, SdeError> =
        pool.install(|| (0..exp.sim.paths).into_par_iter().map(|i| simulate_one(exp, i)).collect());
    Ok(out?)
}

/// Means, standard errors and covariances, accumulated in path order.
pub fn aggregate(values: &[Vec<C64>], k: usize) -> (Vec<C64>, Vec<f64>, Vec<Vec<C64>>) {
    let m = values.len().max(1) as f64;
    let mut mean = vec![ZERO; k];
    for v in values {
        for (a, x) in mean.iter_mut().zip(v) {
            *a += x;
        }
    }
    for a in mean.iter_mut() {
        *a /= m;
    }
    let mut cov = vec![vec![ZERO; k]; k];
    for v in values {
        for i in 0..k {
            let di = v[i] - mean[i];
            for j in 0..k {
                cov[i][j] += di * (v[j] - mean[j]).conj();
            }
        }
    }
    for row in cov.iter_mut() {
        for c in row.iter_mut() {
            *c /= m;
        }
    }
    let dof = (values.len().saturating_sub(1)).max(1) as f64;
    let se = (0..k).map(|i| (cov[i][i].re / dof).sqrt()).collect();
    (mean, se, cov)
}

fn z_score(mean: C64, reference: C64, se: f64) -> f64 {
    let d = (mean - reference).norm();
    if se > 0.0 {
        d / se
    } else if d == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Runs the experiment and attaches references.
pub fn run_mc(exp: &Experiment) -> Result<MomentReport, HarnessError> {
    let start = Instant::now();
    let raw = simulate_values(exp)?;
    let paths = raw.len();
    let values: Vec<Vec<C64>> = raw.into_iter().flatten().collect();
    let blowups = paths - values.len();
    if blowups as f64 > MAX_BLOWUP_FRACTION * paths as f64 || values.is_empty() {
        return Err(HarnessError::TooManyBlowUps { failed: blowups, paths });
    }
    if blowups > 0 {
        log::warn!("{blowups} of {paths} paths blew up and were dropped");
    }
    let (mean, se, covariance) = aggregate(&values, exp.words.len());
    let mut words = Vec::with_capacity(exp.words.len());
    for (i, w) in exp.words.iter().enumerate() {
        let reference = reference_value(w, &exp.sim, exp.compare_to)?;
        let z = reference.map(|r| z_score(mean[i], r, se[i]));
        words.push(WordStats { word: w.clone(), mean: mean[i], se: se[i], reference, z });
    }
    Ok(MomentReport {
        r: exp.sim.r,
        s: exp.sim.s,
        n: exp.sim.n,
        paths,
        dt: exp.sim.effective_dt(),
        seed: exp.sim.seed,
        scheme: exp.sim.scheme,
        blowups,
        wall_time_s: start.elapsed().as_secs_f64(),
        words,
        covariance,
    })
}

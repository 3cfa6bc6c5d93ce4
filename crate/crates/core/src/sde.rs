//! GUE Brownian increments and integrators for the GL(N) Brownian motion
//! dB = B dW - (r - s)/2 B dt driven by W = sqrt(r) i X + sqrt(s) Y.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::SdeError;
use crate::linalg::{expm_into, gemm, ComplexMatrix, ExpmWorkspace, C64, I, ONE, ZERO};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Euler,
    #[default]
    Geometric,
}

/// Simulation parameters shared by every path of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub r: f64,
    pub s: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub times: Vec<f64>,
    /// Maximum step; `None` means min(1e-3, max time / 1000).
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub scheme: Scheme,
    pub seed: u64,
    pub paths: usize,
}

impl SimConfig {
    /// Checks the config and warns once about degenerate weights.
    pub fn validate(&self) -> Result<(), SdeError> {
        self.check()?;
        if self.r == 0.0 || self.s == 0.0 {
            log::warn!("degenerate weights r = {}, s = {}: proceeding", self.r, self.s);
        }
        Ok(())
    }

    pub(crate) fn check(&self) -> Result<(), SdeError> {
        let bad = |m: &str| Err(SdeError::InvalidConfig(m.to_string()));
        if !(self.r >= 0.0 && self.s >= 0.0 && self.r.is_finite() && self.s.is_finite()) {
            return bad("r and s must be finite and nonnegative");
        }
        if self.n == 0 {
            return bad("N must be at least 1");
        }
        if self.paths == 0 {
            return bad("paths must be at least 1");
        }
        if self.times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return bad("times must be finite and nonnegative");
        }
        if self.times.windows(2).any(|w| w[0] > w[1]) {
            return bad("times must be ascending");
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("dt must be positive");
            }
        }
        Ok(())
    }

    pub fn max_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn effective_dt(&self) -> f64 {
        match self.dt {
            Some(dt) => dt,
            None => {
                let t = self.max_time();
                if t > 0.0 {
                    (t / 1e3).min(1e-3)
                } else {
                    1e-3
                }
            }
        }
    }
}

/// Independent stream for path `index` of a run seeded with `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A pair of independent GUE increments over a step of length `dt`.
#[derive(Clone, Debug)]
pub struct DriverIncrement {
    pub dx: ComplexMatrix,
    pub dy: ComplexMatrix,
    pub dt: f64,
}

impl DriverIncrement {
    pub fn zero(n: usize) -> Self {
        Self { dx: ComplexMatrix::zeros(n), dy: ComplexMatrix::zeros(n), dt: 0.0 }
    }

    /// sqrt(r) i dX + sqrt(s) dY, written into `out`.
    pub fn driver_into(&self, r: f64, s: f64, out: &mut ComplexMatrix) {
        let a = I * r.sqrt();
        let b = s.sqrt();
        for ((w, x), y) in out.as_mut_slice().iter_mut().zip(self.dx.as_slice()).zip(self.dy.as_slice()) {
            *w = a * x + y * b;
        }
    }

    pub fn driver(&self, r: f64, s: f64) -> ComplexMatrix {
        let mut w = ComplexMatrix::zeros(self.dx.n());
        self.driver_into(r, s, &mut w);
        w
    }
}

/// Fills `m` with a GUE increment: diagonal variance dt/N, off-diagonal real
/// and imaginary parts each of variance dt/(2N), mirrored to be Hermitian.
pub fn fill_gue<R: Rng + ?Sized>(m: &mut ComplexMatrix, dt: f64, rng: &mut R) {
    let n = m.n();
    let sd_diag = (dt / n as f64).sqrt();
    let sd_off = (dt / (2.0 * n as f64)).sqrt();
    for j in 0..n {
        let g: f64 = rng.sample(StandardNormal);
        m[(j, j)] = C64::new(g * sd_diag, 0.0);
    }
    for j in 0..n {
        for k in j + 1..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = C64::new(re * sd_off, im * sd_off);
            m[(j, k)] = z;
            m[(k, j)] = z.conj();
        }
    }
}

pub fn sample_increment<R: Rng + ?Sized>(n: usize, dt: f64, rng: &mut R) -> DriverIncrement {
    let mut inc = DriverIncrement::zero(n);
    sample_increment_into(&mut inc, dt, rng);
    inc
}

/// Draws dX then dY; this order is part of the reproducibility contract.
pub fn sample_increment_into<R: Rng + ?Sized>(inc: &mut DriverIncrement, dt: f64, rng: &mut R) {
    fill_gue(&mut inc.dx, dt, rng);
    fill_gue(&mut inc.dy, dt, rng);
    inc.dt = dt;
}

/// One step of the forward equation.
pub fn step(b: &ComplexMatrix, inc: &DriverIncrement, r: f64, s: f64, scheme: Scheme) -> Result<ComplexMatrix, SdeError> {
    let mut stepper = Stepper::new(b.n(), r, s, scheme);
    let mut out = b.clone();
    stepper.apply_forward(&mut out, inc)?;
    Ok(out)
}

/// One step of the inverse (right-invariant) equation dA = -dW A - (r - s)/2 A dt.
pub fn step_inverse(a: &ComplexMatrix, inc: &DriverIncrement, r: f64, s: f64, scheme: Scheme) -> Result<ComplexMatrix, SdeError> {
    let mut stepper = Stepper::new(a.n(), r, s, scheme);
    let mut out = a.clone();
    stepper.apply_inverse(&mut out, inc)?;
    Ok(out)
}

/// Reusable buffers for stepping one path.
pub struct Stepper {
    r: f64,
    s: f64,
    scheme: Scheme,
    inc: DriverIncrement,
    w: ComplexMatrix,
    factor: ComplexMatrix,
    tmp: ComplexMatrix,
    ws: ExpmWorkspace,
}

impl Stepper {
    pub fn new(n: usize, r: f64, s: f64, scheme: Scheme) -> Self {
        Self {
            r,
            s,
            scheme,
            inc: DriverIncrement::zero(n),
            w: ComplexMatrix::zeros(n),
            factor: ComplexMatrix::zeros(n),
            tmp: ComplexMatrix::zeros(n),
            ws: ExpmWorkspace::new(n),
        }
    }

    pub fn increment(&self) -> &DriverIncrement {
        &self.inc
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) {
        sample_increment_into(&mut self.inc, dt, rng);
    }

    /// Right factor F with B' = B F; `sign` = -1 gives the inverse factor.
    fn build_factor(&mut self, inc: &DriverIncrement, sign: f64) -> Result<(), SdeError> {
        inc.driver_into(self.r, self.s, &mut self.w);
        match self.scheme {
            Scheme::Euler => {
                self.factor.copy_from(&self.w);
                self.factor.scale_mut(C64::new(sign, 0.0));
                self.factor.add_identity(C64::new(1.0 - 0.5 * (self.r - self.s) * inc.dt, 0.0));
            }
            Scheme::Geometric => {
                if sign < 0.0 {
                    self.w.scale_mut(-ONE);
                }
                expm_into(&self.w, &mut self.factor, &mut self.ws)?;
            }
        }
        Ok(())
    }

    pub fn apply_forward(&mut self, b: &mut ComplexMatrix, inc: &DriverIncrement) -> Result<(), SdeError> {
        self.build_factor(inc, 1.0)?;
        gemm(ONE, b, &self.factor, ZERO, &mut self.tmp);
        std::mem::swap(b, &mut self.tmp);
        Ok(())
    }

    pub fn apply_inverse(&mut self, a: &mut ComplexMatrix, inc: &DriverIncrement) -> Result<(), SdeError> {
        self.build_factor(inc, -1.0)?;
        gemm(ONE, &self.factor, a, ZERO, &mut self.tmp);
        std::mem::swap(a, &mut self.tmp);
        Ok(())
    }

    /// Draw a fresh increment and advance `b` with it.
    pub fn advance<R: Rng + ?Sized>(&mut self, b: &mut ComplexMatrix, dt: f64, rng: &mut R) -> Result<(), SdeError> {
        sample_increment_into(&mut self.inc, dt, rng);
        let inc = std::mem::replace(&mut self.inc, DriverIncrement::zero(0));
        let res = self.apply_forward(b, &inc);
        self.inc = inc;
        res
    }

    /// Advance a forward/inverse pair on the same driver.
    pub fn advance_pair<R: Rng + ?Sized>(&mut self, b: &mut ComplexMatrix, a: &mut ComplexMatrix, dt: f64, rng: &mut R) -> Result<(), SdeError> {
        sample_increment_into(&mut self.inc, dt, rng);
        let inc = std::mem::replace(&mut self.inc, DriverIncrement::zero(0));
        let res = self.apply_forward(b, &inc).and_then(|_| self.apply_inverse(a, &inc));
        self.inc = inc;
        res
    }
}

/// Sampled trajectory.
#[derive(Clone, Debug)]
pub struct MatrixPath {
    pub samples: Vec<(f64, ComplexMatrix)>,
    /// (t_prev, t_next, B(t_prev)^-1 B(t_next)) for consecutive samples,
    /// starting from the initial identity at t = 0.
    pub increments: Option<Vec<(f64, f64, ComplexMatrix)>>,
}

impl MatrixPath {
    pub fn at(&self, t: f64) -> Option<&ComplexMatrix> {
        self.samples.iter().find(|(s, _)| *s == t).map(|(_, m)| m)
    }
}

/// Equal sub-steps of size at most `dt` landing exactly on `t1`.
fn substeps(t0: f64, t1: f64, dt: f64) -> (usize, f64) {
    let span = t1 - t0;
    if span <= 0.0 {
        return (0, 0.0);
    }
    let k = (span / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (k, span / k as f64)
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

fn integrate<R: Rng + ?Sized>(
    config: &SimConfig,
    rng: &mut R,
    direction: Direction,
    with_increments: bool,
) -> Result<MatrixPath, SdeError> {
    config.check()?;
    let n = config.n;
    let dt = config.effective_dt();
    let mut stepper = Stepper::new(n, config.r, config.s, config.scheme);
    let mut state = ComplexMatrix::identity(n);
    let mut samples = Vec::with_capacity(config.times.len());
    let mut increments = with_increments.then(Vec::new);
    let mut t = 0.0;
    let mut prev = state.clone();
    let mut prev_t = 0.0;
    for &target in &config.times {
        let (k, h) = substeps(t, target, dt);
        for i in 0..k {
            stepper.draw(h, rng);
            let inc = std::mem::replace(&mut stepper.inc, DriverIncrement::zero(0));
            let res = match direction {
                Direction::Forward => stepper.apply_forward(&mut state, &inc),
                Direction::Inverse => stepper.apply_inverse(&mut state, &inc),
            };
            stepper.inc = inc;
            let now = t + (i + 1) as f64 * h;
            res.map_err(|_| SdeError::BlowUp { time: now })?;
            if !state.is_finite() {
                return Err(SdeError::BlowUp { time: now });
            }
        }
        t = target;
        if let Some(incs) = increments.as_mut() {
            let inv = prev.inverse().map_err(|_| SdeError::BlowUp { time: prev_t })?;
            let d = match direction {
                Direction::Forward => inv.matmul(&state),
                Direction::Inverse => state.matmul(&inv),
            };
            incs.push((prev_t, target, d));
            prev.copy_from(&state);
            prev_t = target;
        }
        samples.push((target, state.clone()));
    }
    Ok(MatrixPath { samples, increments })
}

/// Forward path sampled at `config.times`, with multiplicative increments.
pub fn simulate_path<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<MatrixPath, SdeError> {
    integrate(config, rng, Direction::Forward, true)
}

/// Forward path without the increment bookkeeping.
pub fn simulate_samples<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<MatrixPath, SdeError> {
    integrate(config, rng, Direction::Forward, false)
}

/// Inverse path; fed the same stream as `simulate_path`, it sees the same
/// driver, so B(t) A(t) = I up to the scheme's accuracy.
pub fn simulate_inverse_path<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<MatrixPath, SdeError> {
    integrate(config, rng, Direction::Inverse, true)
}

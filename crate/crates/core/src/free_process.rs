//! Multi-time moments of the free limit process.
//!
//! A word in b at several times is rewritten in the free, stationary
//! increments a_j (b at the j-th distinct time is a_1 a_2 ... a_j). Its trace
//! is then computed twice: by the trace-polynomial semigroup on the
//! increment word, and by factorizing over free increments with the
//! single-time word oracle.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::FreeProcessError;
use crate::linalg::{C64, ONE, ZERO};
use crate::oracle::{word_moment_with, EvalPoint, WordSolver};
use crate::trace_poly::{canonical_rotation, limit_moment, Letter, Word};

/// Relative tolerance for route agreement, against max(1, |value|).
pub const ROUTE_TOLERANCE: f64 = 1e-8;

/// One factor b(time) or b(time)*.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedLetter {
    pub time: f64,
    pub star: bool,
}

/// Serialized as its string form, e.g. "1 2* 1*".
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TimedWord {
    pub letters: Vec<TimedLetter>,
}

impl TimedWord {
    pub fn new(letters: Vec<TimedLetter>) -> Result<Self, FreeProcessError> {
        if let Some(l) = letters.iter().find(|l| !(l.time.is_finite() && l.time >= 0.0)) {
            return Err(FreeProcessError::InvalidWord(format!("time {} is not a nonnegative number", l.time)));
        }
        Ok(Self { letters })
    }

    /// Parses "1.0 2.0* 1.0*": one time per letter, `*` for the adjoint.
    pub fn parse(spec: &str) -> Result<Self, FreeProcessError> {
        let letters = spec
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|tok| {
                let (num, star) = match tok.strip_suffix('*') {
                    Some(rest) => (rest, true),
                    None => (tok, false),
                };
                num.parse::<f64>()
                    .map(|time| TimedLetter { time, star })
                    .map_err(|_| FreeProcessError::InvalidWord(format!("bad letter {tok:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(letters)
    }

    /// All letters at time `t` with the given star flags.
    pub fn single_time(t: f64, stars: &[bool]) -> Result<Self, FreeProcessError> {
        Self::new(stars.iter().map(|&star| TimedLetter { time: t, star }).collect())
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn adjoint(&self) -> Self {
        Self { letters: self.letters.iter().rev().map(|l| TimedLetter { time: l.time, star: !l.star }).collect() }
    }
}

impl fmt::Display for TimedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.letters.iter().map(|l| format!("{}{}", l.time, if l.star { "*" } else { "" })).collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl TryFrom<String> for TimedWord {
    type Error = FreeProcessError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::parse(&s)
    }
}

impl From<TimedWord> for String {
    fn from(w: TimedWord) -> Self {
        w.to_string()
    }
}

/// Word in the increments a_1..a_n; `gaps[j - 1]` is the time length of a_j.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IncrementWord {
    pub letters: Vec<Letter>,
    pub gaps: Vec<f64>,
}

impl IncrementWord {
    /// b at the j-th distinct positive time, as increment letters.
    pub fn reconstruct(&self, j: usize, star: bool) -> Vec<Letter> {
        if star {
            (1..=j as u32).rev().map(Letter::starred).collect()
        } else {
            (1..=j as u32).map(Letter::plain).collect()
        }
    }
}

/// Rewrites the word in increments. Letters at time 0 are the identity and
/// are dropped, so every gap is positive.
pub fn increment_rewrite(w: &TimedWord) -> IncrementWord {
    let mut times: Vec<f64> = w.letters.iter().map(|l| l.time).filter(|&t| t > 0.0).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut gaps = Vec::with_capacity(times.len());
    let mut prev = 0.0;
    for &t in &times {
        gaps.push(t - prev);
        prev = t;
    }
    let mut out = IncrementWord { letters: Vec::new(), gaps };
    for l in &w.letters {
        if l.time > 0.0 {
            let j = times.partition_point(|&t| t < l.time) + 1;
            let expanded = out.reconstruct(j, l.star);
            out.letters.extend(expanded);
        }
    }
    out
}

/// Rotates a word in at least two variables to start at a change of
/// variable and returns the rotation with its maximal one-variable runs, so
/// that cyclically adjacent runs differ. `None` if only one variable occurs.
fn cyclic_runs(w: &[Letter]) -> Option<(Vec<Letter>, Vec<(usize, usize)>)> {
    let m = w.len();
    let start = (0..m).find(|&i| w[i].index != w[(i + m - 1) % m].index)?;
    let rotated: Vec<Letter> = w[start..].iter().chain(&w[..start]).copied().collect();
    let mut runs = Vec::new();
    let mut i = 0;
    while i < m {
        let mut j = i + 1;
        while j < m && rotated[j].index == rotated[i].index {
            j += 1;
        }
        runs.push((i, j));
        i = j;
    }
    Some((rotated, runs))
}

/// Mixed moment of free variables by recursive centering. `single` returns
/// the trace of a word in one increment, given the increment index and the
/// star flags.
pub fn free_factorize(w: &IncrementWord, mut single: impl FnMut(u32, &[bool]) -> C64) -> C64 {
    let mut memo: HashMap<Vec<Letter>, C64> = HashMap::new();
    factorize_rec(&w.letters, &mut single, &mut memo)
}

fn factorize_rec(
    word: &[Letter],
    single: &mut dyn FnMut(u32, &[bool]) -> C64,
    memo: &mut HashMap<Vec<Letter>, C64>,
) -> C64 {
    if word.is_empty() {
        return ONE;
    }
    let key = canonical_rotation(word);
    if let Some(v) = memo.get(&key) {
        return *v;
    }
    let value = match cyclic_runs(&key) {
        None => {
            let stars: Vec<bool> = key.iter().map(|l| l.star).collect();
            single(key[0].index, &stars)
        }
        Some((rotated, runs)) => centered_sum(&rotated, &runs, single, memo),
    };
    memo.insert(key, value);
    value
}

/// tau(y_1 ... y_k) = -sum over proper subsets S of
/// prod_{i not in S} (-tau(y_i)) * tau(prod_{i in S} y_i),
/// since the product of the centered, alternating y_i has trace zero.
fn centered_sum(
    word: &[Letter],
    runs: &[(usize, usize)],
    single: &mut dyn FnMut(u32, &[bool]) -> C64,
    memo: &mut HashMap<Vec<Letter>, C64>,
) -> C64 {
    let k = runs.len();
    let means: Vec<C64> = runs
        .iter()
        .map(|&(a, b)| {
            let stars: Vec<bool> = word[a..b].iter().map(|l| l.star).collect();
            single(word[a].index, &stars)
        })
        .collect();
    let full = (1usize << k) - 1;
    let mut total = ZERO;
    let mut buf = Vec::with_capacity(word.len());
    for subset in 0..full {
        let mut weight = ONE;
        for (i, mean) in means.iter().enumerate() {
            if subset & (1 << i) == 0 {
                weight *= -mean;
            }
        }
        if weight == ZERO {
            continue;
        }
        buf.clear();
        for (i, &(a, b)) in runs.iter().enumerate() {
            if subset & (1 << i) != 0 {
                buf.extend_from_slice(&word[a..b]);
            }
        }
        total -= weight * factorize_rec(&buf, single, memo);
    }
    total
}

/// Value of a timed-word moment with both routes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessMoment {
    pub value: C64,
    pub route_a: C64,
    pub route_b: C64,
}

impl ProcessMoment {
    pub fn discrepancy(&self) -> f64 {
        (self.route_a - self.route_b).norm() / self.route_a.norm().max(1.0)
    }
}

/// Evaluator holding the single-time word memo for one (r, s).
pub struct ProcessEngine {
    r: f64,
    s: f64,
    solver: WordSolver,
    singles: HashMap<(Vec<bool>, u64), f64>,
}

impl ProcessEngine {
    pub fn new(r: f64, s: f64) -> Result<Self, FreeProcessError> {
        EvalPoint::new(r, s, 0.0)?;
        let sigma = r + s;
        let c = if sigma > 0.0 { (s - r) / sigma } else { 0.0 };
        Ok(Self { r, s, solver: WordSolver::new(c), singles: HashMap::new() })
    }

    /// tau(b_t^{eps_1} ... b_t^{eps_n}) from the word recursion.
    pub fn single_time(&mut self, stars: &[bool], t: f64) -> f64 {
        let key = (stars.to_vec(), t.to_bits());
        if let Some(v) = self.singles.get(&key) {
            return *v;
        }
        let p = EvalPoint { r: self.r, s: self.s, t };
        let v = word_moment_with(&mut self.solver, stars, &p);
        self.singles.insert(key, v);
        v
    }

    /// Route A: semigroup on the increment word with times = gaps.
    pub fn route_a(&self, inc: &IncrementWord) -> Result<C64, FreeProcessError> {
        if inc.letters.is_empty() {
            return Ok(ONE);
        }
        let word = Word::new(inc.letters.clone())?;
        Ok(limit_moment(&word, &inc.gaps, self.r, self.s)?)
    }

    /// Route B: free factorization with stationary increments.
    pub fn route_b(&mut self, inc: &IncrementWord) -> C64 {
        let gaps = inc.gaps.clone();
        free_factorize(inc, |j, stars| C64::new(self.single_time(stars, gaps[j as usize - 1]), 0.0))
    }

    /// Both routes; fails if they disagree beyond `ROUTE_TOLERANCE`.
    pub fn moment(&mut self, w: &TimedWord) -> Result<ProcessMoment, FreeProcessError> {
        let inc = increment_rewrite(w);
        let route_a = self.route_a(&inc)?;
        let route_b = self.route_b(&inc);
        let pm = ProcessMoment { value: route_a, route_a, route_b };
        if !(pm.discrepancy() <= ROUTE_TOLERANCE) {
            return Err(FreeProcessError::Inconsistent { route_a: route_a.to_string(), route_b: route_b.to_string() });
        }
        Ok(pm)
    }
}

/// tau of the timed word in the free process with parameters (r, s).
pub fn process_moment(w: &TimedWord, r: f64, s: f64) -> Result<ProcessMoment, FreeProcessError> {
    ProcessEngine::new(r, s)?.moment(w)
}

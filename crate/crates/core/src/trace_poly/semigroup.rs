//! Heat-kernel expectations as exponentials of the intertwining operators
//! on finite, operator-closed sets of monomials.

use std::collections::HashMap;

use super::intertwiner::{IntertwinerAction, Terms};
use super::poly::TracePolynomial;
use super::word::{Monomial, Word};
use crate::error::TracePolyError;
use crate::linalg::{ComplexMatrix, C64, ZERO};

pub const DEFAULT_SUBSPACE_CAP: usize = 200_000;
pub const DEFAULT_DEGREE_CAP: usize = 16;
/// Largest subspace handled by dense scaling and squaring under `Auto`.
pub const DENSE_MAX: usize = 256;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExpMethod {
    /// Dense for small subspaces, truncated-Taylor action otherwise.
    #[default]
    Auto,
    Dense,
    Taylor,
    Rk4,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemigroupOptions {
    /// Identify words up to rotation.
    pub cyclic: bool,
    pub cap: usize,
    pub degree_cap: usize,
    pub method: ExpMethod,
    /// In the limit, evaluate each trace variable separately and multiply.
    pub factorize_limit: bool,
}

impl Default for SemigroupOptions {
    fn default() -> Self {
        Self { cyclic: true, cap: DEFAULT_SUBSPACE_CAP, degree_cap: DEFAULT_DEGREE_CAP, method: ExpMethod::Auto, factorize_limit: true }
    }
}

/// Sparse generator on a closed monomial set, stored by columns.
#[derive(Clone, Debug)]
pub struct Generator {
    monomials: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
    cols: Vec<Vec<(usize, f64)>>,
}

/// One summand of a generator: an operator with weights on its first- and
/// second-order parts.
#[derive(Clone, Debug)]
pub struct GeneratorPart {
    pub op: IntertwinerAction,
    pub first: f64,
    pub second: f64,
}

struct TermCache<'a> {
    parts: &'a [GeneratorPart],
    q: HashMap<(usize, Word), Terms>,
    r: HashMap<(usize, Word, Word), Terms>,
}

impl<'a> TermCache<'a> {
    fn q(&mut self, p: usize, w: &Word) -> &Terms {
        let op = &self.parts[p].op;
        self.q.entry((p, w.clone())).or_insert_with(|| op.q_terms(w))
    }

    fn r(&mut self, p: usize, a: &Word, b: &Word) -> &Terms {
        let op = &self.parts[p].op;
        self.r.entry((p, a.clone(), b.clone())).or_insert_with(|| op.r_terms(a, b))
    }
}

impl Generator {
    /// Closes `seeds` under every part and records the weighted action.
    pub fn build(seeds: &[Monomial], parts: &[GeneratorPart], cap: usize) -> Result<Self, TracePolyError> {
        let mut gen = Generator { monomials: Vec::new(), index: HashMap::new(), cols: Vec::new() };
        let degree = seeds.iter().map(Monomial::degree).max().unwrap_or(0);
        for m in seeds {
            gen.register(m.clone(), cap, degree)?;
        }
        let mut cache = TermCache { parts, q: HashMap::new(), r: HashMap::new() };
        let mut i = 0;
        while i < gen.monomials.len() {
            let m = gen.monomials[i].clone();
            let mut col: HashMap<usize, f64> = HashMap::new();
            let f = m.factors();
            for (p, part) in parts.iter().enumerate() {
                if part.first != 0.0 {
                    for a in 0..f.len() {
                        let rest = m.without(&[a]);
                        let terms = cache.q(p, &f[a]).clone();
                        for (qm, c) in terms {
                            let mut words = rest.clone();
                            words.extend(qm.factors().iter().cloned());
                            let k = gen.register(Monomial::from_words(words), cap, degree)?;
                            *col.entry(k).or_default() += part.first * c;
                        }
                    }
                }
                if part.second != 0.0 {
                    for a in 0..f.len() {
                        for b in 0..f.len() {
                            if a == b {
                                continue;
                            }
                            let rest = m.without(&[a, b]);
                            let terms = cache.r(p, &f[a], &f[b]).clone();
                            for (rm, c) in terms {
                                let mut words = rest.clone();
                                words.extend(rm.factors().iter().cloned());
                                let k = gen.register(Monomial::from_words(words), cap, degree)?;
                                *col.entry(k).or_default() += part.second * c;
                            }
                        }
                    }
                }
            }
            let mut col: Vec<(usize, f64)> = col.into_iter().filter(|(_, c)| *c != 0.0).collect();
            col.sort_unstable_by_key(|e| e.0);
            gen.cols.push(col);
            i += 1;
        }
        Ok(gen)
    }

    fn register(&mut self, m: Monomial, cap: usize, degree: usize) -> Result<usize, TracePolyError> {
        if let Some(&k) = self.index.get(&m) {
            return Ok(k);
        }
        if self.monomials.len() >= cap {
            return Err(TracePolyError::SubspaceCap { degree, cap });
        }
        let k = self.monomials.len();
        self.index.insert(m.clone(), k);
        self.monomials.push(m);
        Ok(k)
    }

    pub fn dim(&self) -> usize {
        self.monomials.len()
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        self.cols.iter().map(|c| c.iter().map(|e| e.1.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Dense copy, entry (row, col).
    pub fn to_dense(&self) -> ComplexMatrix {
        let mut g = ComplexMatrix::zeros(self.dim());
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, c) in col {
                g[(i, j)] += C64::new(c, 0.0);
            }
        }
        g
    }

    /// y = G x
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.fill(ZERO);
        for (j, col) in self.cols.iter().enumerate() {
            let xj = x[j];
            if xj == ZERO {
                continue;
            }
            for &(i, c) in col {
                y[i] += xj * c;
            }
        }
    }

    /// Coefficient vector of `p` in this basis; every monomial must be present.
    pub fn coordinates(&self, p: &TracePolynomial) -> Vec<C64> {
        let mut v = vec![ZERO; self.dim()];
        for (m, c) in p.terms() {
            v[self.index[m]] += c;
        }
        v
    }

    /// exp(G) x by the requested method.
    pub fn exp_action(&self, x: &[C64], method: ExpMethod) -> Result<Vec<C64>, TracePolyError> {
        let method = match method {
            ExpMethod::Auto if self.dim() <= DENSE_MAX => ExpMethod::Dense,
            ExpMethod::Auto => ExpMethod::Taylor,
            m => m,
        };
        match method {
            ExpMethod::Dense => {
                let e = self.to_dense().expm()?;
                let n = self.dim();
                Ok((0..n).map(|i| (0..n).map(|j| e[(i, j)] * x[j]).sum()).collect())
            }
            ExpMethod::Taylor => Ok(self.taylor_action(x)),
            ExpMethod::Rk4 => Ok(self.rk4_action(x)),
            ExpMethod::Auto => unreachable!(),
        }
    }

    fn taylor_action(&self, x: &[C64]) -> Vec<C64> {
        let norm1 = |v: &[C64]| v.iter().map(|z| z.norm()).sum::<f64>();
        let steps = self.one_norm().ceil().max(1.0) as usize;
        let h = 1.0 / steps as f64;
        let mut v = x.to_vec();
        let mut term = vec![ZERO; v.len()];
        let mut next = vec![ZERO; v.len()];
        for _ in 0..steps {
            term.copy_from_slice(&v);
            let mut small = 0;
            for k in 1..200 {
                self.apply(&term, &mut next);
                let f = h / k as f64;
                for z in next.iter_mut() {
                    *z *= f;
                }
                std::mem::swap(&mut term, &mut next);
                for (a, b) in v.iter_mut().zip(&term) {
                    *a += b;
                }
                // two consecutive negligible terms
                if norm1(&term) <= 1e-18 * norm1(&v) {
                    small += 1;
                    if small == 2 {
                        break;
                    }
                } else {
                    small = 0;
                }
            }
        }
        v
    }

    fn rk4_action(&self, x: &[C64]) -> Vec<C64> {
        let steps = (self.one_norm() / 0.01).ceil().max(1.0) as usize;
        let h = 1.0 / steps as f64;
        let n = x.len();
        let mut v = x.to_vec();
        let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]);
        for _ in 0..steps {
            self.apply(&v, &mut k1);
            for i in 0..n {
                tmp[i] = v[i] + k1[i] * (0.5 * h);
            }
            self.apply(&tmp, &mut k2);
            for i in 0..n {
                tmp[i] = v[i] + k2[i] * (0.5 * h);
            }
            self.apply(&tmp, &mut k3);
            for i in 0..n {
                tmp[i] = v[i] + k3[i] * h;
            }
            self.apply(&tmp, &mut k4);
            for i in 0..n {
                v[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
        }
        v
    }
}

/// Smallest monomial set containing P's monomials and closed under the
/// first-order parts of `ops` (and the second-order parts if requested).
pub fn closed_subspace(
    p: &TracePolynomial,
    ops: &[IntertwinerAction],
    second_order: bool,
    cap: usize,
) -> Result<Vec<Monomial>, TracePolyError> {
    let seeds: Vec<Monomial> = p.terms().map(|(m, _)| m.clone()).collect();
    let parts: Vec<GeneratorPart> =
        ops.iter().map(|op| GeneratorPart { op: op.clone(), first: 1.0, second: if second_order { 1.0 } else { 0.0 } }).collect();
    Ok(Generator::build(&seeds, &parts, cap)?.monomials)
}

fn check_inputs(p: &TracePolynomial, t_vec: &[f64], r: f64, s: f64, opts: &SemigroupOptions) -> Result<(), TracePolyError> {
    if !(r >= 0.0 && s >= 0.0) {
        return Err(TracePolyError::NegativeWeights { r, s });
    }
    let degree = p.degree();
    if degree > opts.degree_cap {
        return Err(TracePolyError::DegreeCap { degree, cap: opts.degree_cap });
    }
    let need = p.max_index();
    if need as usize > t_vec.len() {
        return Err(TracePolyError::MissingIndex(need));
    }
    Ok(())
}

/// Generator parts for times `t_vec` (index j uses t_vec[j - 1]).
pub fn generator_parts(
    t_vec: &[f64],
    r: f64,
    s: f64,
    n: Option<usize>,
    max_index: u32,
    cyclic: bool,
) -> Result<Vec<GeneratorPart>, TracePolyError> {
    let mut parts = Vec::new();
    for j in 1..=max_index {
        let t = t_vec[j as usize - 1];
        if t == 0.0 {
            continue;
        }
        let op = IntertwinerAction::new(j, r, s)?.with_cyclic(cyclic);
        let second = match n {
            Some(n) => 0.5 * t / (n * n) as f64,
            None => 0.0,
        };
        parts.push(GeneratorPart { op, first: 0.5 * t, second });
    }
    Ok(parts)
}

/// (exp(D^t + L^t / N^2) P)(1), or the limit (no L) when `n` is `None`.
pub fn semigroup_apply_with(
    p: &TracePolynomial,
    t_vec: &[f64],
    r: f64,
    s: f64,
    n: Option<usize>,
    opts: &SemigroupOptions,
) -> Result<C64, TracePolyError> {
    check_inputs(p, t_vec, r, s, opts)?;
    if n == Some(0) {
        return Err(TracePolyError::InvalidWord("dimension must be positive".into()));
    }
    let src = if opts.cyclic { p.cyclic_canonical() } else { p.clone() };
    let parts = generator_parts(t_vec, r, s, n, src.max_index(), opts.cyclic)?;
    if parts.is_empty() {
        return Ok(src.evaluate_at_one());
    }
    if n.is_none() && opts.factorize_limit {
        let mut memo: HashMap<Word, C64> = HashMap::new();
        let mut total = ZERO;
        for (m, c) in src.terms() {
            let mut prod = *c;
            for w in m.factors() {
                let v = match memo.get(w) {
                    Some(v) => *v,
                    None => {
                        let single = TracePolynomial::variable(w.clone());
                        let v = exp_at_one(&single, &parts, opts)?;
                        memo.insert(w.clone(), v);
                        v
                    }
                };
                prod *= v;
            }
            total += prod;
        }
        return Ok(total);
    }
    exp_at_one(&src, &parts, opts)
}

fn exp_at_one(p: &TracePolynomial, parts: &[GeneratorPart], opts: &SemigroupOptions) -> Result<C64, TracePolyError> {
    let seeds: Vec<Monomial> = p.terms().map(|(m, _)| m.clone()).collect();
    let gen = Generator::build(&seeds, parts, opts.cap)?;
    let x = gen.coordinates(p);
    Ok(gen.exp_action(&x, opts.method)?.iter().sum())
}

pub fn semigroup_apply(p: &TracePolynomial, t_vec: &[f64], r: f64, s: f64, n: Option<usize>) -> Result<C64, TracePolyError> {
    semigroup_apply_with(p, t_vec, r, s, n, &SemigroupOptions::default())
}

/// Large-N limit of E tr(word) for independent motions run for `times`.
pub fn limit_moment(word: &Word, times: &[f64], r: f64, s: f64) -> Result<C64, TracePolyError> {
    semigroup_apply(&TracePolynomial::variable(word.clone()), times, r, s, None)
}

/// Exact E tr(word) at dimension `n`.
pub fn finite_n_moment(word: &Word, times: &[f64], r: f64, s: f64, n: usize) -> Result<C64, TracePolyError> {
    semigroup_apply(&TracePolynomial::variable(word.clone()), times, r, s, Some(n))
}

//! First- and second-order intertwining operators for the Laplacian in one
//! matrix argument.
//!
//! Differentiating tr(... A_j ...) along A_j -> A_j e^{h eta} inserts eta
//! right after a plain A_j and eta* right before a starred A_j*. In the
//! plus sector eta* = -eta, in the minus sector eta* = eta. Summing over the
//! basis then uses
//!   sum eta B eta = -+ tr(B) I        (same trace)
//!   sum tr(B eta) tr(C eta) = -+ tr(BC) / N^2   (two traces)
//! with the upper sign for the plus sector.

use std::collections::HashMap;

use super::poly::TracePolynomial;
use super::word::{Letter, Monomial, Word};
use crate::error::TracePolyError;
use crate::linalg::{Sector, C64};

/// Sparse image of a basis element: (monomial, coefficient).
pub type Terms = Vec<(Monomial, f64)>;

#[derive(Clone, Debug, PartialEq)]
pub struct IntertwinerAction {
    j: u32,
    r: f64,
    s: f64,
    cyclic: bool,
}

/// Position of the inserted basis element for letter `l` at slot `k`:
/// gap g sits between letters g-1 and g.
fn gap(k: usize, l: &Letter) -> usize {
    if l.star {
        k
    } else {
        k + 1
    }
}

fn sector_weight(sector: Sector, stars: usize) -> f64 {
    sector.magic_sign() * sector.adjoint_sign().powi(stars as i32)
}

impl IntertwinerAction {
    pub fn new(j: u32, r: f64, s: f64) -> Result<Self, TracePolyError> {
        if j == 0 {
            return Err(TracePolyError::InvalidWord("indices start at 1".into()));
        }
        if !(r >= 0.0 && s >= 0.0) {
            return Err(TracePolyError::NegativeWeights { r, s });
        }
        Ok(Self { j, r, s, cyclic: false })
    }

    /// Emit words in least-rotation form.
    pub fn with_cyclic(mut self, on: bool) -> Self {
        self.cyclic = on;
        self
    }

    pub fn index(&self) -> u32 {
        self.j
    }

    pub fn cyclic(&self) -> bool {
        self.cyclic
    }

    fn weight(&self, stars: usize) -> f64 {
        self.r * sector_weight(Sector::Plus, stars) + self.s * sector_weight(Sector::Minus, stars)
    }

    fn word(&self, letters: Vec<Letter>) -> Word {
        let w = Word::from_letters_unchecked(letters);
        if self.cyclic {
            w.cyclic_canonical()
        } else {
            w
        }
    }

    fn q_with(&self, w: &Word, weight: impl Fn(usize) -> f64) -> Terms {
        let letters = w.letters();
        let m = letters.len();
        let slots: Vec<usize> = (0..m).filter(|&k| letters[k].index == self.j).collect();
        let mut acc: HashMap<Monomial, f64> = HashMap::new();
        if slots.is_empty() {
            return Vec::new();
        }
        // second derivative in one slot: sum eta^2 = -+ I, no adjoint sign
        let diag = slots.len() as f64 * weight(0);
        *acc.entry(Monomial::single(self.word(letters.to_vec()))).or_default() += diag;
        for (a, &k) in slots.iter().enumerate() {
            for &l in &slots[a + 1..] {
                let (gk, gl) = (gap(k, &letters[k]), gap(l, &letters[l]));
                let stars = letters[k].star as usize + letters[l].star as usize;
                let inner: Vec<Letter> = letters[gk..gl].to_vec();
                let outer: Vec<Letter> = letters[gl..].iter().chain(&letters[..gk]).copied().collect();
                let factors: Vec<Word> =
                    [inner, outer].into_iter().filter(|v| !v.is_empty()).map(|v| self.word(v)).collect();
                *acc.entry(Monomial::from_words(factors)).or_default() += 2.0 * weight(stars);
            }
        }
        finish(acc)
    }

    fn r_with(&self, a: &Word, b: &Word, weight: impl Fn(usize) -> f64) -> Terms {
        let (la, lb) = (a.letters(), b.letters());
        let mut acc: HashMap<Monomial, f64> = HashMap::new();
        for (k, x) in la.iter().enumerate().filter(|(_, x)| x.index == self.j) {
            let pa = a.rotated(gap(k, x) % la.len());
            for (l, y) in lb.iter().enumerate().filter(|(_, y)| y.index == self.j) {
                let mut joined = pa.clone();
                joined.extend(b.rotated(gap(l, y) % lb.len()));
                let stars = x.star as usize + y.star as usize;
                *acc.entry(Monomial::single(self.word(joined))).or_default() += weight(stars);
            }
        }
        finish(acc)
    }

    /// Q^j_w combined over sectors with weights r (plus) and s (minus).
    pub fn q_terms(&self, w: &Word) -> Terms {
        self.q_with(w, |stars| self.weight(stars))
    }

    /// Q^{j,sector}_w, unweighted.
    pub fn q_sector(&self, w: &Word, sector: Sector) -> Terms {
        self.q_with(w, |stars| sector_weight(sector, stars))
    }

    /// R^j_{a,b} combined over sectors.
    pub fn r_terms(&self, a: &Word, b: &Word) -> Terms {
        self.r_with(a, b, |stars| self.weight(stars))
    }

    pub fn r_sector(&self, a: &Word, b: &Word, sector: Sector) -> Terms {
        self.r_with(a, b, |stars| sector_weight(sector, stars))
    }

    pub fn q(&self, w: &Word) -> TracePolynomial {
        to_poly(self.q_terms(w))
    }

    pub fn r_pair(&self, a: &Word, b: &Word) -> TracePolynomial {
        to_poly(self.r_terms(a, b))
    }

    /// First-order operator on one monomial (product rule over factors).
    pub fn apply_d_monomial(&self, m: &Monomial) -> Terms {
        let mut acc: HashMap<Monomial, f64> = HashMap::new();
        for (i, w) in m.factors().iter().enumerate() {
            let rest = m.without(&[i]);
            for (qm, c) in self.q_terms(w) {
                let mut words = rest.clone();
                words.extend(qm.factors().iter().cloned());
                *acc.entry(Monomial::from_words(words)).or_default() += c;
            }
        }
        finish(acc)
    }

    /// Second-order operator on one monomial: ordered pairs of distinct factors.
    pub fn apply_l_monomial(&self, m: &Monomial) -> Terms {
        let f = m.factors();
        let mut acc: HashMap<Monomial, f64> = HashMap::new();
        for i in 0..f.len() {
            for k in 0..f.len() {
                if i == k {
                    continue;
                }
                let rest = m.without(&[i, k]);
                for (rm, c) in self.r_terms(&f[i], &f[k]) {
                    let mut words = rest.clone();
                    words.extend(rm.factors().iter().cloned());
                    *acc.entry(Monomial::from_words(words)).or_default() += c;
                }
            }
        }
        finish(acc)
    }

    pub fn apply_d(&self, p: &TracePolynomial) -> TracePolynomial {
        apply_linear(p, |m| self.apply_d_monomial(m))
    }

    pub fn apply_l(&self, p: &TracePolynomial) -> TracePolynomial {
        apply_linear(p, |m| self.apply_l_monomial(m))
    }
}

fn finish(acc: HashMap<Monomial, f64>) -> Terms {
    let mut v: Terms = acc.into_iter().filter(|(_, c)| *c != 0.0).collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

fn to_poly(terms: Terms) -> TracePolynomial {
    let mut p = TracePolynomial::zero();
    for (m, c) in terms {
        p.add_term(m, C64::new(c, 0.0));
    }
    p
}

fn apply_linear(p: &TracePolynomial, f: impl Fn(&Monomial) -> Terms) -> TracePolynomial {
    let mut out = TracePolynomial::zero();
    for (m, c) in p.terms() {
        for (img, v) in f(m) {
            out.add_term(img, c * v);
        }
    }
    out
}

/// The intertwiner: Q and R as polynomials built from the insertion rules.
pub fn build_intertwiner(j: u32, r: f64, s: f64) -> Result<IntertwinerAction, TracePolyError> {
    IntertwinerAction::new(j, r, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn single_letter_q() {
        let op = build_intertwiner(1, 0.7, 0.2).unwrap();
        let q = op.q_terms(&w("1"));
        assert_eq!(q, vec![(Monomial::single(w("1")), 0.2 - 0.7)]);
    }

    #[test]
    fn single_letter_r() {
        let op = build_intertwiner(1, 0.7, 0.2).unwrap();
        let r = op.r_terms(&w("1"), &w("1"));
        assert_eq!(r, vec![(Monomial::single(w("1 1")), 0.2 - 0.7)]);
    }

    #[test]
    fn other_index_vanishes() {
        let op = build_intertwiner(2, 1.0, 1.0).unwrap();
        assert!(op.q_terms(&w("1 1* 3")).is_empty());
        assert!(op.r_terms(&w("1"), &w("2")).is_empty());
    }

    #[test]
    fn bbstar_rate_is_4s() {
        let op = build_intertwiner(1, 0.3, 0.9).unwrap().with_cyclic(true);
        let q = op.q_terms(&w("1 1*"));
        assert_eq!(q.len(), 1);
        assert!((q[0].1 - 4.0 * 0.9).abs() < 1e-15);
    }

    #[test]
    fn degrees_preserved() {
        let op = build_intertwiner(1, 1.0, 2.0).unwrap();
        for spec in ["1 1* 2 1", "1 2 1* 1* 1", "2 1"] {
            let word = w(spec);
            assert!(op.q_terms(&word).iter().all(|(m, _)| m.degree() == word.len()));
            let other = w("1* 2*");
            assert!(op.r_terms(&word, &other).iter().all(|(m, _)| m.degree() == word.len() + 2));
        }
    }
}

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use super::word::{Letter, Monomial, Word};
use crate::error::TracePolyError;
use crate::linalg::{ComplexMatrix, C64, ONE, ZERO};

/// Finite linear combination of monomials in the trace variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TracePolynomial {
    terms: BTreeMap<Monomial, C64>,
}

impl TracePolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(ONE)
    }

    pub fn constant(c: C64) -> Self {
        Self::monomial(Monomial::unit(), c)
    }

    pub fn monomial(m: Monomial, c: C64) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn variable(w: Word) -> Self {
        Self::monomial(Monomial::single(w), ONE)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> C64 {
        self.terms.get(m).copied().unwrap_or(ZERO)
    }

    pub fn add_term(&mut self, m: Monomial, c: C64) {
        if c == ZERO {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == ZERO {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = Self::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    /// Highest trace degree among the terms (0 for constants and zero).
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn max_index(&self) -> u32 {
        self.terms.keys().flat_map(|m| m.factors().iter().map(Word::max_index)).max().unwrap_or(0)
    }

    /// Every word replaced by its least rotation.
    pub fn cyclic_canonical(&self) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.add_term(m.cyclic_canonical(), *c);
        }
        out
    }

    /// Conjugate-linear map sending v_w to v_{w*}.
    pub fn conjugate(&self) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.add_term(m.adjoint(), c.conj());
        }
        out
    }

    /// Substitutes v_w = tr(word in mats); index j reads mats[j - 1].
    pub fn evaluate(&self, mats: &[ComplexMatrix]) -> Result<C64, TracePolyError> {
        let need = self.max_index() as usize;
        if need > mats.len() {
            return Err(TracePolyError::MissingIndex(need as u32));
        }
        if let Some(first) = mats.first() {
            for m in mats {
                m.check_same_dim(first)?;
            }
        }
        let adjoints: Vec<ComplexMatrix> = mats.iter().map(ComplexMatrix::adjoint).collect();
        let mut cache: BTreeMap<&Word, C64> = BTreeMap::new();
        let mut total = ZERO;
        for (m, c) in &self.terms {
            let mut prod = *c;
            for w in m.factors() {
                let v = *cache.entry(w).or_insert_with(|| word_trace(w.letters(), mats, &adjoints));
                prod *= v;
            }
            total += prod;
        }
        Ok(total)
    }

    /// Every variable set to 1: the sum of coefficients.
    pub fn evaluate_at_one(&self) -> C64 {
        self.terms.values().sum()
    }
}

/// tr of the matrix word; `adjoints[j]` is mats[j]*.
pub fn word_trace(letters: &[Letter], mats: &[ComplexMatrix], adjoints: &[ComplexMatrix]) -> C64 {
    let pick = |l: &Letter| if l.star { &adjoints[l.index as usize - 1] } else { &mats[l.index as usize - 1] };
    match letters {
        [] => ONE,
        [a] => pick(a).tr(),
        [rest @ .., last] => {
            let mut acc = pick(&rest[0]).clone();
            for l in &rest[1..] {
                acc = acc.matmul(pick(l));
            }
            acc.tr_product(pick(last))
        }
    }
}

/// Embeds a word as the trace variable v_word.
pub fn embed_nc_monomial(w: &Word) -> TracePolynomial {
    TracePolynomial::variable(w.clone())
}

/// Linear extension to noncommutative polynomials; an empty letter list is
/// the constant 1.
pub fn embed_nc_polynomial(terms: &[(C64, Vec<Letter>)]) -> Result<TracePolynomial, TracePolyError> {
    let mut p = TracePolynomial::zero();
    for (c, letters) in terms {
        if letters.is_empty() {
            p.add_term(Monomial::unit(), *c);
        } else {
            p.add_term(Monomial::single(Word::new(letters.clone())?), *c);
        }
    }
    Ok(p)
}

impl fmt::Display for TracePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(m, c)| format!("({:.6}{:+.6}i) {}", c.re, c.im, m)).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

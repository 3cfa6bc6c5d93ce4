use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::TracePolyError;

/// One letter X_j or X_j*.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub index: u32,
    pub star: bool,
}

impl Letter {
    pub fn new(index: u32, star: bool) -> Self {
        Self { index, star }
    }

    pub fn plain(index: u32) -> Self {
        Self { index, star: false }
    }

    pub fn starred(index: u32) -> Self {
        Self { index, star: true }
    }

    pub fn adjoint(self) -> Self {
        Self { index: self.index, star: !self.star }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.index, if self.star { "*" } else { "" })
    }
}

/// Nonempty word in letters; names the trace variable v_word.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new(letters: Vec<Letter>) -> Result<Self, TracePolyError> {
        if letters.is_empty() {
            return Err(TracePolyError::InvalidWord("words must be nonempty".into()));
        }
        if letters.iter().any(|l| l.index == 0) {
            return Err(TracePolyError::InvalidWord("indices start at 1".into()));
        }
        Ok(Self(letters))
    }

    /// Caller guarantees a nonempty letter list.
    pub(crate) fn from_letters_unchecked(letters: Vec<Letter>) -> Self {
        debug_assert!(!letters.is_empty());
        Self(letters)
    }

    /// Single-index word from star flags (`true` = starred).
    pub fn single_index(index: u32, stars: &[bool]) -> Result<Self, TracePolyError> {
        Self::new(stars.iter().map(|&s| Letter::new(index, s)).collect())
    }

    /// Parses "1 2* 1*" or "1,2*,1*".
    pub fn parse(spec: &str) -> Result<Self, TracePolyError> {
        let letters = spec
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|tok| {
                let (num, star) = match tok.strip_suffix('*') {
                    Some(rest) => (rest, true),
                    None => (tok, false),
                };
                num.parse::<u32>()
                    .map(|i| Letter::new(i, star))
                    .map_err(|_| TracePolyError::InvalidWord(format!("bad letter {tok:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_index(&self) -> u32 {
        self.0.iter().map(|l| l.index).max().unwrap_or(0)
    }

    /// Reverse and flip stars: the word of the adjoint product.
    pub fn adjoint(&self) -> Self {
        Self(self.0.iter().rev().map(|l| l.adjoint()).collect())
    }

    /// Rotation starting at position `k`.
    pub fn rotated(&self, k: usize) -> Vec<Letter> {
        self.0[k..].iter().chain(&self.0[..k]).copied().collect()
    }

    /// Least rotation; equal traces under every evaluation.
    pub fn cyclic_canonical(&self) -> Self {
        Self(canonical_rotation(&self.0))
    }
}

/// Least rotation of a letter sequence (Booth's algorithm).
pub fn canonical_rotation(s: &[Letter]) -> Vec<Letter> {
    let n = s.len();
    if n <= 1 {
        return s.to_vec();
    }
    let mut f = vec![usize::MAX; 2 * n];
    let mut k = 0usize;
    for j in 1..2 * n {
        let sj = s[j % n];
        let mut i = f[j - k - 1];
        while i != usize::MAX && sj != s[(k + i + 1) % n] {
            if sj < s[(k + i + 1) % n] {
                k = j - i - 1;
            }
            i = f[i];
        }
        if i == usize::MAX && sj != s[(k + i.wrapping_add(1)) % n] {
            if sj < s[k % n] {
                k = j;
            }
            f[j - k] = usize::MAX;
        } else {
            f[j - k] = i.wrapping_add(1);
        }
    }
    s[k..].iter().chain(&s[..k]).copied().collect()
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Commutative product of trace variables; the empty product is 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Monomial(Vec<Word>);

impl Monomial {
    pub fn unit() -> Self {
        Self(Vec::new())
    }

    pub fn from_words(mut words: Vec<Word>) -> Self {
        words.sort_unstable();
        Self(words)
    }

    pub fn single(w: Word) -> Self {
        Self(vec![w])
    }

    pub fn factors(&self) -> &[Word] {
        &self.0
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    /// Trace degree: total letter count.
    pub fn degree(&self) -> usize {
        self.0.iter().map(Word::len).sum()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut w = self.0.clone();
        w.extend(other.0.iter().cloned());
        Self::from_words(w)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_words(self.0.iter().map(Word::adjoint).collect())
    }

    pub fn cyclic_canonical(&self) -> Self {
        Self::from_words(self.0.iter().map(Word::cyclic_canonical).collect())
    }

    /// Product of all factors except position `skip`.
    pub(crate) fn without(&self, skip: &[usize]) -> Vec<Word> {
        self.0.iter().enumerate().filter(|(i, _)| !skip.contains(i)).map(|(_, w)| w.clone()).collect()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.0.iter().map(|w| format!("v[{w}]")).collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_min(s: &[Letter]) -> Vec<Letter> {
        (0..s.len()).map(|k| s[k..].iter().chain(&s[..k]).copied().collect::<Vec<_>>()).min().unwrap()
    }

    #[test]
    fn booth_matches_naive() {
        let alphabet = [Letter::plain(1), Letter::starred(1), Letter::plain(2)];
        for code in 0..3usize.pow(7) {
            for len in 1..=7 {
                let s: Vec<Letter> = (0..len).map(|i| alphabet[(code / 3usize.pow(i as u32)) % 3]).collect();
                assert_eq!(canonical_rotation(&s), naive_min(&s), "{s:?}");
            }
        }
    }

    #[test]
    fn parse_and_display() {
        let w = Word::parse("1 2* 1*").unwrap();
        assert_eq!(w.letters(), &[Letter::plain(1), Letter::starred(2), Letter::starred(1)]);
        assert_eq!(w.to_string(), "1 2* 1*");
        assert!(Word::parse("").is_err());
        assert!(Word::parse("0").is_err());
        assert!(Word::parse("a*").is_err());
    }

    #[test]
    fn adjoint_reverses_and_flips() {
        let w = Word::parse("1 2*").unwrap();
        assert_eq!(w.adjoint(), Word::parse("2 1*").unwrap());
        assert_eq!(w.adjoint().adjoint(), w);
    }

    #[test]
    fn monomial_is_sorted() {
        let a = Word::parse("2").unwrap();
        let b = Word::parse("1 1").unwrap();
        assert_eq!(Monomial::from_words(vec![a.clone(), b.clone()]), Monomial::from_words(vec![b, a]));
        assert_eq!(Monomial::unit().degree(), 0);
    }
}

//! Finite alphabets, topological Markov chains and their admissible words.
//!
//! Symbols are dense indices `0..len` into an [`Alphabet`]; labels are only
//! used at the edges (model files, reports).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered set of distinct symbol labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet {
    labels: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        Ok(Self { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Render a symbol sequence; labels are concatenated when all are one
    /// character long and comma separated otherwise.
    pub fn render(&self, symbols: &[usize]) -> String {
        let sep = if self.labels.iter().all(|l| l.chars().count() == 1) {
            ""
        } else {
            ","
        };
        symbols
            .iter()
            .map(|&s| self.labels[s].as_str())
            .collect::<Vec<_>>()
            .join(sep)
    }

    /// Inverse of [`Alphabet::render`]. An empty string parses to an empty
    /// sequence.
    pub fn parse(&self, text: &str) -> Result<Vec<usize>> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Vec::new());
        }
        let tokens: Vec<String> = if text.contains(',') {
            text.split(',').map(|t| t.trim().to_string()).collect()
        } else {
            text.chars().map(|c| c.to_string()).collect()
        };
        tokens
            .iter()
            .map(|t| self.index_of(t).ok_or_else(|| Error::UnknownLabel(t.clone())))
            .collect()
    }
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.labels
    }
}

/// Outcome of the primitivity search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Primitivity {
    /// `M^exponent > 0` and no smaller power is positive.
    Primitive { exponent: usize },
    /// No power up to the Wielandt bound is positive; `zero_pattern` is the
    /// boolean support of `M^bound` (`true` where the entry is zero).
    NotPrimitive { bound: usize, zero_pattern: Vec<Vec<bool>> },
}

impl Primitivity {
    pub fn is_primitive(&self) -> bool {
        matches!(self, Primitivity::Primitive { .. })
    }

    pub fn exponent(&self) -> Option<usize> {
        match self {
            Primitivity::Primitive { exponent } => Some(*exponent),
            Primitivity::NotPrimitive { .. } => None,
        }
    }
}

/// A topological Markov chain: an alphabet and a 0/1 incidence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tmc {
    alphabet: Alphabet,
    incidence: Vec<Vec<bool>>,
    primitivity_exponent: Option<usize>,
}

impl Tmc {
    /// Build from a square 0/1 matrix. Every symbol needs at least one
    /// successor and one predecessor.
    pub fn new(alphabet: Alphabet, incidence: &[Vec<u8>]) -> Result<Self> {
        let n = alphabet.len();
        if incidence.len() != n || incidence.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(format!(
                "incidence must be {n}x{n} to match the alphabet"
            )));
        }
        let mut rows = vec![vec![false; n]; n];
        for (i, row) in incidence.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => rows[i][j] = true,
                    value => return Err(Error::NotBinary { row: i, col: j, value }),
                }
            }
        }
        Self::from_bool(alphabet, rows)
    }

    pub fn from_bool(alphabet: Alphabet, incidence: Vec<Vec<bool>>) -> Result<Self> {
        let n = alphabet.len();
        if incidence.len() != n || incidence.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(format!(
                "incidence must be {n}x{n} to match the alphabet"
            )));
        }
        for i in 0..n {
            let out = incidence[i].iter().any(|&x| x);
            let inc = (0..n).any(|k| incidence[k][i]);
            if !out || !inc {
                return Err(Error::StrandedSymbol(alphabet.label(i).to_string()));
            }
        }
        let mut tmc = Self {
            alphabet,
            incidence,
            primitivity_exponent: None,
        };
        tmc.primitivity_exponent = check_primitivity(&tmc).exponent();
        Ok(tmc)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn size(&self) -> usize {
        self.alphabet.len()
    }

    #[inline]
    pub fn allowed(&self, from: usize, to: usize) -> bool {
        self.incidence[from][to]
    }

    pub fn incidence(&self) -> &[Vec<bool>] {
        &self.incidence
    }

    pub fn incidence_u8(&self) -> Vec<Vec<u8>> {
        self.incidence
            .iter()
            .map(|r| r.iter().map(|&b| b as u8).collect())
            .collect()
    }

    pub fn primitivity_exponent(&self) -> Option<usize> {
        self.primitivity_exponent
    }

    pub fn is_primitive(&self) -> bool {
        self.primitivity_exponent.is_some()
    }

    pub fn is_full_shift(&self) -> bool {
        self.incidence.iter().all(|r| r.iter().all(|&x| x))
    }

    pub fn successors(&self, from: usize) -> impl Iterator<Item = usize> + '_ {
        self.incidence[from]
            .iter()
            .enumerate()
            .filter_map(|(j, &x)| x.then_some(j))
    }

    pub fn predecessors(&self, to: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.size()).filter(move |&i| self.incidence[i][to])
    }

    /// Nonempty and every consecutive pair allowed.
    pub fn is_admissible(&self, symbols: &[usize]) -> bool {
        !symbols.is_empty()
            && symbols.iter().all(|&s| s < self.size())
            && symbols.windows(2).all(|w| self.allowed(w[0], w[1]))
    }

    fn check_admissible(&self, symbols: &[usize]) -> Result<()> {
        if symbols.is_empty() {
            return Err(Error::WordTooShort { min: 1, got: 0 });
        }
        if let Some(&s) = symbols.iter().find(|&&s| s >= self.size()) {
            return Err(Error::Dimension(format!("symbol index {s} out of range")));
        }
        for w in symbols.windows(2) {
            if !self.allowed(w[0], w[1]) {
                return Err(Error::Inadmissible {
                    from: self.alphabet.label(w[0]).to_string(),
                    to: self.alphabet.label(w[1]).to_string(),
                });
            }
        }
        Ok(())
    }
}

/// An admissible finite block of a [`Tmc`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    symbols: Vec<usize>,
}

impl Word {
    pub fn new(tmc: &Tmc, symbols: Vec<usize>) -> Result<Self> {
        tmc.check_admissible(&symbols)?;
        Ok(Self { symbols })
    }

    pub fn from_labels(tmc: &Tmc, text: &str) -> Result<Self> {
        let symbols = tmc.alphabet().parse(text)?;
        Self::new(tmc, symbols)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn first(&self) -> usize {
        self.symbols[0]
    }

    pub fn last(&self) -> usize {
        self.symbols[self.symbols.len() - 1]
    }

    pub fn into_symbols(self) -> Vec<usize> {
        self.symbols
    }
}

impl AsRef<[usize]> for Word {
    fn as_ref(&self) -> &[usize] {
        &self.symbols
    }
}

/// A periodic point `w^∞` with `w` cyclically admissible and not a proper
/// power, so `w.len()` is the minimal period.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PeriodicPoint {
    word: Word,
}

impl PeriodicPoint {
    pub fn new(tmc: &Tmc, symbols: Vec<usize>) -> Result<Self> {
        let word = Word::new(tmc, symbols)?;
        if !tmc.allowed(word.last(), word.first()) {
            return Err(Error::Inadmissible {
                from: tmc.alphabet().label(word.last()).to_string(),
                to: tmc.alphabet().label(word.first()).to_string(),
            });
        }
        if !is_primitive_word(word.symbols()) {
            return Err(Error::Dimension(
                "period word is a proper power of a shorter word".into(),
            ));
        }
        Ok(Self { word })
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn symbols(&self) -> &[usize] {
        self.word.symbols()
    }

    pub fn period(&self) -> usize {
        self.word.len()
    }
}

/// True when `w` is not `u^k` for a shorter `u`.
pub fn is_primitive_word(w: &[usize]) -> bool {
    let n = w.len();
    (1..n)
        .filter(|d| n.is_multiple_of(*d))
        .all(|d| (0..n).any(|i| w[i] != w[i % d]))
}

fn bool_mul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    let mut out = vec![vec![false; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] {
                for j in 0..n {
                    out[i][j] |= b[k][j];
                }
            }
        }
    }
    out
}

/// Least `m₀` with `M^m₀` entrywise positive, searched up to the Wielandt
/// bound `(n-1)² + 1`.
pub fn check_primitivity(tmc: &Tmc) -> Primitivity {
    let n = tmc.size();
    let bound = (n - 1) * (n - 1) + 1;
    let mut power = tmc.incidence.clone();
    for m in 1..=bound {
        if m > 1 {
            power = bool_mul(&power, &tmc.incidence);
        }
        if power.iter().all(|r| r.iter().all(|&x| x)) {
            return Primitivity::Primitive { exponent: m };
        }
    }
    Primitivity::NotPrimitive {
        bound,
        zero_pattern: power
            .iter()
            .map(|r| r.iter().map(|&x| !x).collect())
            .collect(),
    }
}

/// All admissible words of length `n`, in lexicographic order of indices.
pub fn enumerate_words(tmc: &Tmc, n: usize) -> Result<Vec<Word>> {
    if n == 0 {
        return Err(Error::WordTooShort { min: 1, got: 0 });
    }
    let mut out = Vec::new();
    let mut stack = Vec::with_capacity(n);
    fn rec(tmc: &Tmc, n: usize, stack: &mut Vec<usize>, out: &mut Vec<Word>) {
        if stack.len() == n {
            out.push(Word {
                symbols: stack.clone(),
            });
            return;
        }
        let candidates: Vec<usize> = match stack.last() {
            None => (0..tmc.size()).collect(),
            Some(&l) => tmc.successors(l).collect(),
        };
        for s in candidates {
            stack.push(s);
            rec(tmc, n, stack, out);
            stack.pop();
        }
    }
    rec(tmc, n, &mut stack, &mut out);
    Ok(out)
}

/// Every periodic point of minimal period `≤ p_max`, ordered by period then
/// lexicographically. Rotations of the same cycle are distinct points.
pub fn enumerate_periodic(tmc: &Tmc, p_max: usize) -> Vec<PeriodicPoint> {
    let mut out = Vec::new();
    for p in 1..=p_max {
        // `enumerate_words` only fails for p = 0.
        for w in enumerate_words(tmc, p).unwrap_or_default() {
            if tmc.allowed(w.last(), w.first()) && is_primitive_word(w.symbols()) {
                out.push(PeriodicPoint { word: w });
            }
        }
    }
    out
}

/// The factor-space metric `exp(-j*/(2(#B+1)))`, `j*` the first index where
/// the sequences differ. `declared_equal` stands for `b = b'`.
pub fn sequence_metric(
    b: &[usize],
    b_prime: &[usize],
    factor_size: usize,
    declared_equal: bool,
) -> Result<f64> {
    if declared_equal {
        return Ok(0.0);
    }
    let j = b
        .iter()
        .zip(b_prime)
        .position(|(x, y)| x != y)
        .ok_or(Error::Undetermined)?;
    Ok((-(j as f64) / (2.0 * (factor_size as f64 + 1.0))).exp())
}

impl fmt::Display for Tmc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.incidence.iter().enumerate() {
            let succ: Vec<&str> = row
                .iter()
                .enumerate()
                .filter(|(_, &x)| x)
                .map(|(j, _)| self.alphabet.label(j))
                .collect();
            writeln!(f, "{} -> {{{}}}", self.alphabet.label(i), succ.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn golden() -> Tmc {
        Tmc::new(Alphabet::new(["0", "1"]).unwrap(), &[vec![1, 1], vec![1, 0]]).unwrap()
    }

    fn adhoc() -> Tmc {
        let mut m = vec![vec![0u8; 5]; 5];
        for (i, succ) in [(0, &[1, 2, 3][..]), (1, &[0, 4]), (2, &[3]), (3, &[0, 4]), (4, &[1, 2, 3])] {
            for &j in succ {
                m[i][j] = 1;
            }
        }
        Tmc::new(Alphabet::new(["1", "2", "3", "4", "5"]).unwrap(), &m).unwrap()
    }

    fn full(n: usize) -> Tmc {
        let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        Tmc::new(Alphabet::new(labels).unwrap(), &vec![vec![1; n]; n]).unwrap()
    }

    // 1ᵀ M^{n-1} 1 by repeated vector-matrix products.
    fn count_oracle(tmc: &Tmc, n: usize) -> u64 {
        let k = tmc.size();
        let mut v = vec![1u64; k];
        for _ in 1..n {
            let mut next = vec![0u64; k];
            for i in 0..k {
                for j in 0..k {
                    if tmc.allowed(i, j) {
                        next[i] += v[j];
                    }
                }
            }
            v = next;
        }
        v.iter().sum()
    }

    #[test]
    fn alphabet_rejects_duplicates_and_empty() {
        assert_eq!(Alphabet::new(["a", "a"]), Err(Error::DuplicateLabel("a".into())));
        assert_eq!(Alphabet::new(Vec::<String>::new()), Err(Error::EmptyAlphabet));
    }

    #[test]
    fn stranded_symbol_is_rejected() {
        let r = Tmc::new(Alphabet::new(["a", "b"]).unwrap(), &[vec![1, 1], vec![0, 0]]);
        assert!(matches!(r, Err(Error::StrandedSymbol(_))));
    }

    #[test]
    fn primitivity_examples() {
        assert_eq!(check_primitivity(&golden()), Primitivity::Primitive { exponent: 2 });
        let id = Tmc::new(Alphabet::new(["a", "b"]).unwrap(), &[vec![1, 0], vec![0, 1]]).unwrap();
        assert!(!check_primitivity(&id).is_primitive());
        assert!(check_primitivity(&adhoc()).is_primitive());
        // boolean powers by hand: adhoc needs exponent ≤ Wielandt bound 17
        assert!(adhoc().primitivity_exponent().unwrap() <= 17);
    }

    #[test]
    fn two_cycle_is_not_primitive() {
        let t = Tmc::new(Alphabet::new(["a", "b"]).unwrap(), &[vec![0, 1], vec![1, 0]]).unwrap();
        match check_primitivity(&t) {
            Primitivity::NotPrimitive { bound, zero_pattern } => {
                assert_eq!(bound, 2);
                assert_eq!(zero_pattern, vec![vec![false, true], vec![true, false]]);
            }
            p => panic!("{p:?}"),
        }
    }

    #[test]
    fn word_enumeration() {
        let g = golden();
        let w2 = enumerate_words(&g, 2).unwrap();
        let syms: Vec<_> = w2.iter().map(|w| w.symbols().to_vec()).collect();
        assert_eq!(syms, vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
        assert_eq!(enumerate_words(&g, 1).unwrap().len(), 2);
        assert_eq!(enumerate_words(&full(4), 3).unwrap().len(), 64);
        assert_eq!(enumerate_words(&g, 0), Err(Error::WordTooShort { min: 1, got: 0 }));
    }

    #[test]
    fn word_counts_match_matrix_powers() {
        for tmc in [golden(), adhoc(), full(3)] {
            for n in 1..=10 {
                assert_eq!(enumerate_words(&tmc, n).unwrap().len() as u64, count_oracle(&tmc, n));
            }
        }
    }

    #[test]
    fn periodic_points() {
        let g = golden();
        let pts: Vec<_> = enumerate_periodic(&g, 2)
            .iter()
            .map(|p| p.symbols().to_vec())
            .collect();
        assert_eq!(pts, vec![vec![0], vec![0, 1], vec![1, 0]]);
        let f2 = full(2);
        assert_eq!(enumerate_periodic(&f2, 1).len(), 2);
        // period-4 primitive words on the full 2-shift: 16 - 4 = 12
        assert_eq!(enumerate_periodic(&f2, 4).iter().filter(|p| p.period() == 4).count(), 12);
    }

    #[test]
    fn factor_digraph_has_the_three_cycle() {
        // a <-> b, a -> c, c -> b
        let t = Tmc::new(
            Alphabet::new(["a", "b", "c"]).unwrap(),
            &[vec![0, 1, 1], vec![1, 0, 0], vec![0, 1, 0]],
        )
        .unwrap();
        let pts: Vec<_> = enumerate_periodic(&t, 3)
            .iter()
            .map(|p| t.alphabet().render(p.symbols()))
            .collect();
        assert_eq!(pts, vec!["ab", "ba", "acb", "bac", "cba"]);
    }

    #[test]
    fn periodic_point_validation() {
        let g = golden();
        assert!(PeriodicPoint::new(&g, vec![0, 0]).is_err());
        assert!(PeriodicPoint::new(&g, vec![1]).is_err());
        assert!(PeriodicPoint::new(&g, vec![0, 1]).is_ok());
    }

    #[test]
    fn metric_examples() {
        let d = sequence_metric(&[0, 1, 0, 1], &[0, 1, 0, 0], 2, false).unwrap();
        assert!((d - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(sequence_metric(&[0], &[0], 2, true).unwrap(), 0.0);
        assert_eq!(sequence_metric(&[1], &[2], 3, false).unwrap(), 1.0);
        assert_eq!(sequence_metric(&[0, 1], &[0, 1, 1], 2, false), Err(Error::Undetermined));
    }

    #[test]
    fn render_parse_roundtrip() {
        let a = Alphabet::new(["x1", "x2"]).unwrap();
        assert_eq!(a.render(&[0, 1, 1]), "x1,x2,x2");
        assert_eq!(a.parse("x1,x2,x2").unwrap(), vec![0, 1, 1]);
        let b = Alphabet::new(["a", "b"]).unwrap();
        assert_eq!(b.parse("abba").unwrap(), vec![0, 1, 1, 0]);
        assert!(b.parse("abc").is_err());
    }

    proptest! {
        #[test]
        fn admissibility_matches_transitions(seq in proptest::collection::vec(0usize..5, 1..12)) {
            let t = adhoc();
            let expected = seq.windows(2).all(|w| t.allowed(w[0], w[1]));
            prop_assert_eq!(Word::new(&t, seq.clone()).is_ok(), expected);
            prop_assert_eq!(t.is_admissible(&seq), expected);
        }

        #[test]
        fn metric_is_ultrametric(
            a in proptest::collection::vec(0usize..2, 16),
            b in proptest::collection::vec(0usize..2, 16),
            c in proptest::collection::vec(0usize..2, 16),
        ) {
            // finite prefixes with a common declared tail; equal prefixes mean equal points
            let d = |x: &[usize], y: &[usize]| sequence_metric(x, y, 2, x == y).unwrap();
            prop_assert!(d(&a, &c) <= d(&a, &b).max(d(&b, &c)) + 1e-15);
        }
    }
}

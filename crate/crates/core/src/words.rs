//! Symbolic itineraries over the alphabet `{L, R}`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Mat2, Point};
use crate::map::{gamma_set, BcnfParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Symbol {
    L,
    R,
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symbol::L => "L",
            Symbol::R => "R",
        })
    }
}

/// A nonempty finite string of symbols, first symbol applied first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidConfig("words must be nonempty".into()));
        }
        Ok(Self(symbols))
    }

    /// `R L^p`.
    pub fn r_l_pow(p: usize) -> Self {
        let mut s = Vec::with_capacity(p + 1);
        s.push(Symbol::R);
        s.extend(std::iter::repeat(Symbol::L).take(p));
        Self(s)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `A_{W_{n-1}} ... A_{W_1} A_{W_0}`.
    pub fn matrix(&self, m: &BcnfParams) -> Mat2 {
        self.0
            .iter()
            .fold(Mat2::IDENTITY, |acc, &s| m.matrix(s) * acc)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let symbols = s
            .chars()
            .map(|c| match c {
                'L' => Ok(Symbol::L),
                'R' => Ok(Symbol::R),
                other => Err(Error::InvalidConfig(format!(
                    "bad symbol {other:?} in word"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Word::new(symbols)
    }
}

impl TryFrom<String> for Word {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Word> for String {
    fn from(w: Word) -> Self {
        w.to_string()
    }
}

/// Derivative product along a word.
pub fn phi(m: &BcnfParams, w: &Word) -> Mat2 {
    w.matrix(m)
}

/// A finite, nonempty set of words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordSet(Vec<Word>);

impl WordSet {
    pub fn new(words: Vec<Word>) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::InvalidConfig("word sets must be nonempty".into()));
        }
        Ok(Self(words))
    }

    /// `{ R L^p | 0 <= p <= p_max }`.
    pub fn canonical(p_max: usize) -> Self {
        Self((0..=p_max).map(Word::r_l_pow).collect())
    }

    pub fn words(&self) -> &[Word] {
        &self.0
    }

    /// Length of the longest word.
    pub fn max_len(&self) -> usize {
        self.0.iter().map(Word::len).max().unwrap_or(0)
    }

    /// Whether `symbols` is an exact concatenation of members of the set.
    pub fn generates(&self, symbols: &[Symbol]) -> bool {
        // reachable[i]: the prefix of length i decomposes
        let n = symbols.len();
        let mut reachable = vec![false; n + 1];
        reachable[0] = true;
        for i in 0..n {
            if !reachable[i] {
                continue;
            }
            for w in &self.0 {
                let end = i + w.len();
                if end <= n && symbols[i..end] == w.0[..] {
                    reachable[end] = true;
                }
            }
        }
        reachable[n]
    }

    pub fn matrices(&self, m: &BcnfParams) -> Vec<Mat2> {
        self.0.iter().map(|w| w.matrix(m)).collect()
    }
}

impl fmt::Display for WordSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{w}")?;
        }
        f.write_str("}")
    }
}

pub fn is_generated_by(w: &Word, ws: &WordSet) -> bool {
    ws.generates(w.symbols())
}

/// All words `W` of length `n` with `W_i` compatible with `f^i(x)`.
pub fn itineraries(m: &BcnfParams, x: Point, n: usize) -> BTreeSet<Word> {
    let mut prefixes: Vec<Vec<Symbol>> = vec![Vec::with_capacity(n)];
    let mut p = x;
    for _ in 0..n {
        let choices = gamma_set(p);
        prefixes = prefixes
            .into_iter()
            .flat_map(|pre| {
                choices.iter().map(move |&s| {
                    let mut next = pre.clone();
                    next.push(s);
                    next
                })
            })
            .collect();
        p = m.apply(p);
    }
    prefixes
        .into_iter()
        .filter_map(|s| Word::new(s).ok())
        .collect()
}

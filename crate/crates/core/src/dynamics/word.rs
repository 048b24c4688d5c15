use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::{Diffeo, FlowMap};
use crate::error::{Error, Result};
use crate::geometry::{Point, Vector};

/// Named generators available to words.
pub type GeneratorTable = BTreeMap<String, Arc<dyn Diffeo>>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub name: String,
    pub inverse: bool,
}

impl Letter {
    pub fn new(name: impl Into<String>, inverse: bool) -> Letter {
        Letter { name: name.into(), inverse }
    }

    pub fn inverted(&self) -> Letter {
        Letter { name: self.name.clone(), inverse: !self.inverse }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            write!(f, "{}^-1", self.name)
        } else {
            f.write_str(&self.name)
        }
    }
}

/// A word in generators and their inverses.
///
/// Letters act in reading order: the word `a b` sends `x` to `b(a(x))`.
/// The empty word is the identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct GroupWord {
    pub letters: Vec<Letter>,
}

impl GroupWord {
    pub fn identity() -> GroupWord {
        GroupWord::default()
    }

    pub fn letter(name: impl Into<String>) -> GroupWord {
        GroupWord { letters: vec![Letter::new(name, false)] }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &GroupWord) -> GroupWord {
        let mut letters = self.letters.clone();
        letters.extend(other.letters.iter().cloned());
        GroupWord { letters }
    }

    pub fn inverse(&self) -> GroupWord {
        GroupWord { letters: self.letters.iter().rev().map(Letter::inverted).collect() }
    }

    pub fn pow(&self, n: i64) -> GroupWord {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut w = GroupWord::identity();
        for _ in 0..n.unsigned_abs() {
            w = w.then(&base);
        }
        w
    }

    /// Cancels adjacent `g g⁻¹` pairs.
    pub fn reduced(&self) -> GroupWord {
        let mut out: Vec<Letter> = Vec::with_capacity(self.letters.len());
        for l in &self.letters {
            if out.last().is_some_and(|last| last.name == l.name && last.inverse != l.inverse) {
                out.pop();
            } else {
                out.push(l.clone());
            }
        }
        GroupWord { letters: out }
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("id");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Parses `"g h^-1 g^3"`; letters are separated by whitespace or `*`, an
/// integer exponent repeats a letter, and `id` or an empty string is the
/// identity.
impl FromStr for GroupWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<GroupWord> {
        let mut letters = Vec::new();
        for token in s.split(|c: char| c.is_whitespace() || c == '*').filter(|t| !t.is_empty()) {
            if token == "id" {
                continue;
            }
            let (name, exp) = match token.split_once('^') {
                Some((n, e)) => {
                    let e: i64 = e
                        .parse()
                        .map_err(|_| Error::InvalidWord(format!("bad exponent in `{token}`")))?;
                    (n, e)
                }
                None => (token, 1),
            };
            let valid = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid {
                return Err(Error::InvalidWord(format!("bad generator name `{name}`")));
            }
            for _ in 0..exp.unsigned_abs() {
                letters.push(Letter::new(name, exp < 0));
            }
        }
        Ok(GroupWord { letters })
    }
}

/// A word bound to concrete generators.
#[derive(Clone)]
pub struct WordMap {
    word: GroupWord,
    maps: Vec<(Arc<dyn Diffeo>, bool)>,
}

impl WordMap {
    pub fn word(&self) -> &GroupWord {
        &self.word
    }
}

pub fn compose(word: &GroupWord, generators: &GeneratorTable) -> Result<WordMap> {
    let maps = word
        .letters
        .iter()
        .map(|l| {
            generators
                .get(&l.name)
                .map(|g| (Arc::clone(g), l.inverse))
                .ok_or_else(|| Error::UnknownGenerator(l.name.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WordMap { word: word.clone(), maps })
}

/// `g` applied `n` times (its inverse for negative `n`).
pub fn power(g: Arc<dyn Diffeo>, n: i64) -> WordMap {
    let word = GroupWord::letter("g").pow(n);
    WordMap { word, maps: vec![(g, n < 0); n.unsigned_abs() as usize] }
}

impl Diffeo for WordMap {
    fn apply(&self, x: Point) -> Result<Point> {
        let mut y = x;
        for (g, inv) in &self.maps {
            y = if *inv { g.apply_inverse(y)? } else { g.apply(y)? };
        }
        Ok(y)
    }

    fn apply_inverse(&self, x: Point) -> Result<Point> {
        let mut y = x;
        for (g, inv) in self.maps.iter().rev() {
            y = if *inv { g.apply(y)? } else { g.apply_inverse(y)? };
        }
        Ok(y)
    }

    fn push_forward(&self, x: Point, v: Vector) -> Result<(Point, Vector)> {
        let (mut y, mut w) = (x, v);
        for (g, inv) in &self.maps {
            (y, w) = if *inv { g.push_forward_inverse(y, w)? } else { g.push_forward(y, w)? };
        }
        Ok((y, w))
    }

    fn push_forward_inverse(&self, x: Point, v: Vector) -> Result<(Point, Vector)> {
        let (mut y, mut w) = (x, v);
        for (g, inv) in self.maps.iter().rev() {
            (y, w) = if *inv { g.push_forward(y, w)? } else { g.push_forward_inverse(y, w)? };
        }
        Ok((y, w))
    }

    fn hamiltonian(&self) -> Option<&FlowMap> {
        match self.maps.as_slice() {
            [(g, false)] => g.hamiltonian(),
            _ => None,
        }
    }
}

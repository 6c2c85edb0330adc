//! Input alphabets, input sequences and exhaustive enumeration of `I^n`.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::machine::MachineError;

/// Ordered, duplicate-free set of symbol names.
///
/// The declaration order is the canonical enumeration order: symbol `k` is the
/// `k`-th name, and every enumeration (don't-care expansion, brute force)
/// iterates in that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new<I, S>(names: I) -> Result<Self, MachineError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(MachineError::EmptyAlphabet);
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(MachineError::DuplicateSymbol(name.clone()));
            }
        }
        Ok(Self { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, symbol: usize) -> Option<&str> {
        self.names.get(symbol).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn contains(&self, symbol: usize) -> bool {
        symbol < self.names.len()
    }

    /// Resolves a list of names into an [`InputSequence`].
    pub fn sequence<S: AsRef<str>>(&self, names: &[S]) -> Result<InputSequence, MachineError> {
        let symbols = names
            .iter()
            .map(|n| {
                let n = n.as_ref();
                self.index_of(n)
                    .ok_or_else(|| MachineError::UnknownSymbol(n.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        InputSequence::new(symbols)
    }

    /// Renders a sequence as `[a,b,c]`.
    pub fn render(&self, seq: &[usize]) -> String {
        let parts: Vec<&str> = seq.iter().map(|&s| self.name(s).unwrap_or("?")).collect();
        format!("[{}]", parts.join(","))
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.names.join(" "))
    }
}

/// A non-empty sequence of input symbol indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InputSequence(Vec<usize>);

impl InputSequence {
    pub fn new(symbols: Vec<usize>) -> Result<Self, MachineError> {
        if symbols.is_empty() {
            return Err(MachineError::EmptySequence);
        }
        Ok(Self(symbols))
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl AsRef<[usize]> for InputSequence {
    fn as_ref(&self) -> &[usize] {
        &self.0
    }
}

/// `k^n` as an exact integer.
pub fn sequence_space(alphabet_size: usize, n: usize) -> BigUint {
    let mut total = BigUint::one();
    let k = BigUint::from(alphabet_size);
    for _ in 0..n {
        total *= &k;
    }
    total
}

/// `k^n` if it fits in a `u64`.
pub fn sequence_space_u64(alphabet_size: usize, n: usize) -> Option<u64> {
    sequence_space(alphabet_size, n).to_u64()
}

/// Writes the `index`-th sequence of `I^n` (lexicographic, position 0 most
/// significant) into `out`.
pub fn decode_index(mut index: u64, alphabet_size: usize, out: &mut [usize]) {
    let k = alphabet_size as u64;
    for slot in out.iter_mut().rev() {
        *slot = (index % k) as usize;
        index /= k;
    }
}

/// Lexicographic odometer over all sequences of a fixed length.
///
/// Position 0 varies slowest. Yields `k^n` sequences.
#[derive(Debug, Clone)]
pub struct Odometer {
    alphabet_size: usize,
    current: Vec<usize>,
    done: bool,
}

impl Odometer {
    pub fn new(alphabet_size: usize, n: usize) -> Self {
        Self {
            alphabet_size,
            current: vec![0; n],
            done: alphabet_size == 0,
        }
    }

    /// Advances to the next sequence in place. Returns `false` once exhausted.
    pub fn advance(&mut self) -> bool {
        for slot in self.current.iter_mut().rev() {
            *slot += 1;
            if *slot < self.alphabet_size {
                return true;
            }
            *slot = 0;
        }
        self.done = true;
        false
    }

    pub fn current(&self) -> Option<&[usize]> {
        if self.done {
            None
        } else {
            Some(&self.current)
        }
    }
}

impl Iterator for Odometer {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Self::Item> {
        let out = self.current()?.to_vec();
        self.advance();
        Some(out)
    }
}

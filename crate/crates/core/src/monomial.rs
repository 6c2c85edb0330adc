//! Generalized safe paths: partial maps from time step to input symbol.
//!
//! A [`Monomial`] over horizon `n` binds some time steps to a fixed input and
//! leaves the rest as don't-cares; it stands for every length-`n` sequence
//! that agrees with its bindings. A [`MonomialSet`] is a disjunction of them.
//!
//! Time steps are 1-indexed in the text form (`{1=clean, 2=water}`) and
//! 0-indexed in the API.

use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::sequence::{sequence_space, Alphabet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MonomialError {
    #[error("horizon mismatch: expected {expected}, found {found}")]
    HorizonMismatch { expected: usize, found: usize },
    #[error("time step {step} outside 1..={horizon}")]
    StepOutOfRange { step: usize, horizon: usize },
    #[error("time step {0} bound twice")]
    DuplicateStep(usize),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("exact count exceeded the budget of {0} split nodes")]
    CountBudget(u64),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A conjunction of `step = symbol` literals over a fixed horizon.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    bindings: Vec<Option<usize>>,
}

impl Monomial {
    /// The monomial with no bindings; it covers every sequence.
    pub fn tautology(horizon: usize) -> Self {
        Self {
            bindings: vec![None; horizon],
        }
    }

    /// Every position bound to the corresponding symbol of `seq`.
    pub fn fully_bound(seq: &[usize]) -> Self {
        Self {
            bindings: seq.iter().copied().map(Some).collect(),
        }
    }

    /// Builds a monomial from 1-indexed `(step, symbol)` pairs.
    pub fn from_steps<I>(horizon: usize, steps: I) -> Result<Self, MonomialError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut m = Self::tautology(horizon);
        for (step, symbol) in steps {
            if step == 0 || step > horizon {
                return Err(MonomialError::StepOutOfRange { step, horizon });
            }
            if m.bindings[step - 1].replace(symbol).is_some() {
                return Err(MonomialError::DuplicateStep(step));
            }
        }
        Ok(m)
    }

    pub fn horizon(&self) -> usize {
        self.bindings.len()
    }

    /// Number of bound positions.
    pub fn len(&self) -> usize {
        self.bindings.iter().filter(|b| b.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.iter().all(Option::is_none)
    }

    /// Binding at 0-indexed position `pos`.
    pub fn binding(&self, pos: usize) -> Option<usize> {
        self.bindings[pos]
    }

    pub fn bindings(&self) -> &[Option<usize>] {
        &self.bindings
    }

    /// 1-indexed `(step, symbol)` pairs in step order.
    pub fn steps(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bindings
            .iter()
            .enumerate()
            .filter_map(|(p, b)| b.map(|s| (p + 1, s)))
    }

    /// Copy with position `pos` turned into a don't-care.
    pub fn unbind(&self, pos: usize) -> Self {
        let mut out = self.clone();
        out.bindings[pos] = None;
        out
    }

    /// `k^(n - l)`.
    pub fn expansion_size(&self, alphabet_size: usize) -> BigUint {
        sequence_space(alphabet_size, self.horizon() - self.len())
    }

    /// Lazily enumerates every sequence this monomial stands for, with
    /// don't-cares iterated lexicographically in canonical alphabet order.
    pub fn expand(&self, alphabet_size: usize) -> Expansion<'_> {
        Expansion::new(self, alphabet_size)
    }

    /// Whether `seq` agrees with every binding.
    pub fn covers(&self, seq: &[usize]) -> Result<bool, MonomialError> {
        if seq.len() != self.horizon() {
            return Err(MonomialError::HorizonMismatch {
                expected: self.horizon(),
                found: seq.len(),
            });
        }
        Ok(self.covers_unchecked(seq))
    }

    #[inline]
    pub(crate) fn covers_unchecked(&self, seq: &[usize]) -> bool {
        self.bindings
            .iter()
            .zip(seq)
            .all(|(b, s)| b.is_none_or(|b| b == *s))
    }

    /// Whether every binding of `self` also appears in `other`, i.e. `other`
    /// implies `self`.
    pub fn subsumes(&self, other: &Monomial) -> bool {
        self.horizon() == other.horizon()
            && self
                .bindings
                .iter()
                .zip(&other.bindings)
                .all(|(mine, theirs)| mine.is_none() || mine == theirs)
    }

    /// Text form, e.g. `{1=clean, 2=water}`. Don't-cares are omitted.
    pub fn render(&self, alphabet: &Alphabet) -> String {
        let parts: Vec<String> = self
            .steps()
            .map(|(step, s)| format!("{step}={}", alphabet.name(s).unwrap_or("?")))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }

    /// Parses the text form produced by [`render`](Self::render).
    pub fn parse(text: &str, horizon: usize, alphabet: &Alphabet) -> Result<Self, MonomialError> {
        let bad = |message: &str| MonomialError::Parse {
            line: 0,
            message: message.to_string(),
        };
        let inner = text
            .trim()
            .strip_prefix('{')
            .and_then(|t| t.strip_suffix('}'))
            .ok_or_else(|| bad("expected `{...}`"))?;
        let mut steps = Vec::new();
        for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (step, symbol) = part
                .split_once('=')
                .ok_or_else(|| bad("expected `step=symbol`"))?;
            let step: usize = step
                .trim()
                .parse()
                .map_err(|_| bad("step is not an integer"))?;
            let symbol = symbol.trim();
            let id = alphabet
                .index_of(symbol)
                .ok_or_else(|| MonomialError::UnknownSymbol(symbol.to_string()))?;
            steps.push((step, id));
        }
        Self::from_steps(horizon, steps)
    }
}

/// Iterator returned by [`Monomial::expand`].
#[derive(Debug, Clone)]
pub struct Expansion<'a> {
    monomial: &'a Monomial,
    free: Vec<usize>,
    current: Vec<usize>,
    alphabet_size: usize,
    done: bool,
}

impl<'a> Expansion<'a> {
    fn new(monomial: &'a Monomial, alphabet_size: usize) -> Self {
        let free: Vec<usize> = (0..monomial.horizon())
            .filter(|&p| monomial.bindings[p].is_none())
            .collect();
        let current = monomial.bindings.iter().map(|b| b.unwrap_or(0)).collect();
        Self {
            monomial,
            free,
            current,
            alphabet_size,
            done: alphabet_size == 0 && monomial.len() < monomial.horizon(),
        }
    }

    /// Current sequence, borrowed. `None` once exhausted.
    pub fn peek(&self) -> Option<&[usize]> {
        (!self.done).then_some(self.current.as_slice())
    }

    /// Moves to the next sequence in place.
    pub fn advance(&mut self) {
        for &p in self.free.iter().rev() {
            self.current[p] += 1;
            if self.current[p] < self.alphabet_size {
                return;
            }
            self.current[p] = 0;
        }
        self.done = true;
    }

    pub fn monomial(&self) -> &Monomial {
        self.monomial
    }
}

impl Iterator for Expansion<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.peek()?.to_vec();
        self.advance();
        Some(out)
    }
}

/// Default split-node budget for [`MonomialSet::count_exact`].
pub const DEFAULT_COUNT_BUDGET: u64 = 50_000_000;

/// A disjunction of monomials sharing one horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialSet {
    horizon: usize,
    members: Vec<Monomial>,
}

impl MonomialSet {
    pub fn new(horizon: usize) -> Self {
        Self {
            horizon,
            members: Vec::new(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Monomial> {
        self.members.iter()
    }

    fn check_horizon(&self, m: &Monomial) -> Result<(), MonomialError> {
        if m.horizon() != self.horizon {
            return Err(MonomialError::HorizonMismatch {
                expected: self.horizon,
                found: m.horizon(),
            });
        }
        Ok(())
    }

    /// Adds `m` unless an identical member exists. Returns whether it was added.
    pub fn insert(&mut self, m: Monomial) -> Result<bool, MonomialError> {
        self.check_horizon(&m)?;
        if self.members.contains(&m) {
            return Ok(false);
        }
        self.members.push(m);
        Ok(true)
    }

    /// Whether some member's bindings are a subset of `v`'s bindings.
    ///
    /// Sound but incomplete: a `v` covered only jointly by several members is
    /// reported as not implied.
    pub fn implies(&self, v: &Monomial) -> Result<bool, MonomialError> {
        self.check_horizon(v)?;
        Ok(self.members.iter().any(|m| m.subsumes(v)))
    }

    /// Whether any member covers `seq`.
    pub fn covers(&self, seq: &[usize]) -> Result<bool, MonomialError> {
        if seq.len() != self.horizon {
            return Err(MonomialError::HorizonMismatch {
                expected: self.horizon,
                found: seq.len(),
            });
        }
        Ok(self.members.iter().any(|m| m.covers_unchecked(seq)))
    }

    /// `sum_k |I|^(n - l_k)`. Over-counts sequences covered by more than one
    /// member.
    pub fn count_formula(&self, alphabet_size: usize) -> BigUint {
        self.members
            .iter()
            .map(|m| m.expansion_size(alphabet_size))
            .sum()
    }

    /// Number of distinct sequences covered by the union of all members.
    ///
    /// Splits on one position at a time; symbols that no member binds at that
    /// position share one sub-count. `budget` caps the number of split nodes.
    pub fn count_exact(&self, alphabet_size: usize, budget: u64) -> Result<BigUint, MonomialError> {
        let members: Vec<&Monomial> = self.members.iter().collect();
        let mut remaining = budget;
        union_count(
            &members,
            0,
            self.horizon,
            alphabet_size,
            &mut remaining,
            budget,
        )
    }

    /// One monomial per line under an `n=<horizon>` header.
    pub fn render(&self, alphabet: &Alphabet) -> String {
        let mut out = format!("n={}\n", self.horizon);
        for m in &self.members {
            let _ = writeln!(out, "{}", m.render(alphabet));
        }
        out
    }

    pub fn parse(text: &str, alphabet: &Alphabet) -> Result<Self, MonomialError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines.next().ok_or(MonomialError::Parse {
            line: 1,
            message: "missing `n=<horizon>` header".into(),
        })?;
        let horizon = header
            .strip_prefix("n=")
            .and_then(|h| h.trim().parse().ok())
            .ok_or(MonomialError::Parse {
                line,
                message: "expected `n=<horizon>`".into(),
            })?;
        let mut set = Self::new(horizon);
        for (line, text) in lines {
            let m = Monomial::parse(text, horizon, alphabet).map_err(|e| match e {
                MonomialError::Parse { message, .. } => MonomialError::Parse { line, message },
                other => other,
            })?;
            if !set.insert(m)? {
                return Err(MonomialError::Parse {
                    line,
                    message: "duplicate monomial".into(),
                });
            }
        }
        Ok(set)
    }
}

impl<'a> IntoIterator for &'a MonomialSet {
    type Item = &'a Monomial;
    type IntoIter = std::slice::Iter<'a, Monomial>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

fn union_count(
    members: &[&Monomial],
    pos: usize,
    n: usize,
    k: usize,
    remaining: &mut u64,
    budget: u64,
) -> Result<BigUint, MonomialError> {
    if members.is_empty() {
        return Ok(BigUint::zero());
    }
    if members
        .iter()
        .any(|m| m.bindings[pos..].iter().all(Option::is_none))
    {
        return Ok(sequence_space(k, n - pos));
    }
    if *remaining == 0 {
        return Err(MonomialError::CountBudget(budget));
    }
    *remaining -= 1;

    let free: Vec<&Monomial> = members
        .iter()
        .copied()
        .filter(|m| m.bindings[pos].is_none())
        .collect();
    let mut by_symbol: Vec<Vec<&Monomial>> = vec![Vec::new(); k];
    for m in members {
        if let Some(s) = m.bindings[pos] {
            if s < k {
                by_symbol[s].push(m);
            }
        }
    }

    let mut total = BigUint::zero();
    let unbound_symbols = by_symbol.iter().filter(|b| b.is_empty()).count();
    if unbound_symbols > 0 {
        total += union_count(&free, pos + 1, n, k, remaining, budget)? * unbound_symbols;
    }
    for bound in by_symbol.into_iter().filter(|b| !b.is_empty()) {
        let mut branch = free.clone();
        branch.extend(bound);
        total += union_count(&branch, pos + 1, n, k, remaining, budget)?;
    }
    Ok(total)
}

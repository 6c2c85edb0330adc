//! Systems under learning: anything that can tell whether an input sequence
//! ends in a safe state.
//!
//! [`MachineSul`] answers from an in-process [`MealyMachine`] using its state
//! labels. [`BlackBoxSul`] drives an external process or TCP service over the
//! line protocol in [`wire`] and classifies the final output token.

pub mod wire;

use rand::Rng;
use thiserror::Error;

use crate::machine::{MachineError, MealyMachine};
use crate::sequence::{Alphabet, InputSequence};

pub use wire::{BlackBoxConfig, BlackBoxSul, Endpoint};

#[derive(Debug, Error)]
pub enum SulError {
    #[error("invalid query: {0}")]
    Query(#[from] MachineError),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("invalid black-box configuration: {0}")]
    Config(String),
}

impl SulError {
    pub fn is_transport(&self) -> bool {
        matches!(self, SulError::Transport { .. })
    }
}

/// The single question the learner asks of a system.
pub trait SystemUnderLearning {
    fn alphabet(&self) -> &Alphabet;

    /// Resets the system, feeds `seq`, and reports whether the run is safe.
    /// Equal sequences must get equal answers.
    fn is_safe(&mut self, seq: &[usize]) -> Result<bool, SulError>;

    /// Number of answered queries so far.
    fn query_count(&self) -> u64;
}

impl<S: SystemUnderLearning + ?Sized> SystemUnderLearning for Box<S> {
    fn alphabet(&self) -> &Alphabet {
        (**self).alphabet()
    }

    fn is_safe(&mut self, seq: &[usize]) -> Result<bool, SulError> {
        (**self).is_safe(seq)
    }

    fn query_count(&self) -> u64 {
        (**self).query_count()
    }
}

impl<S: SystemUnderLearning + ?Sized> SystemUnderLearning for &mut S {
    fn alphabet(&self) -> &Alphabet {
        (**self).alphabet()
    }

    fn is_safe(&mut self, seq: &[usize]) -> Result<bool, SulError> {
        (**self).is_safe(seq)
    }

    fn query_count(&self) -> u64 {
        (**self).query_count()
    }
}

/// Opens independent adapter instances, one per concurrent worker.
pub trait SulFactory: Sync {
    fn open(&self) -> Result<Box<dyn SystemUnderLearning + Send + '_>, SulError>;
}

impl SulFactory for MealyMachine {
    fn open(&self) -> Result<Box<dyn SystemUnderLearning + Send + '_>, SulError> {
        Ok(Box::new(MachineSul::new(self)))
    }
}

impl SulFactory for BlackBoxConfig {
    fn open(&self) -> Result<Box<dyn SystemUnderLearning + Send + '_>, SulError> {
        Ok(Box::new(BlackBoxSul::connect(self.clone())?))
    }
}

pub(crate) fn check_query(alphabet: &Alphabet, seq: &[usize]) -> Result<(), SulError> {
    if seq.is_empty() {
        return Err(MachineError::EmptySequence.into());
    }
    if let Some(&bad) = seq.iter().find(|&&s| !alphabet.contains(s)) {
        return Err(MachineError::SymbolOutOfRange(bad).into());
    }
    Ok(())
}

/// In-process adapter: safe iff the final state is a safe state.
#[derive(Debug, Clone)]
pub struct MachineSul<'m> {
    machine: &'m MealyMachine,
    queries: u64,
}

impl<'m> MachineSul<'m> {
    pub fn new(machine: &'m MealyMachine) -> Self {
        Self {
            machine,
            queries: 0,
        }
    }

    pub fn machine(&self) -> &'m MealyMachine {
        self.machine
    }
}

impl SystemUnderLearning for MachineSul<'_> {
    fn alphabet(&self) -> &Alphabet {
        self.machine.inputs()
    }

    fn is_safe(&mut self, seq: &[usize]) -> Result<bool, SulError> {
        check_query(self.machine.inputs(), seq)?;
        self.queries += 1;
        Ok(self.machine.ends_safe(seq))
    }

    fn query_count(&self) -> u64 {
        self.queries
    }
}

/// Fills `buf` with symbols drawn i.i.d. uniformly from `0..alphabet_size`.
pub fn fill_random<R: Rng + ?Sized>(alphabet_size: usize, buf: &mut [usize], rng: &mut R) {
    for slot in buf {
        *slot = rng.random_range(0..alphabet_size);
    }
}

/// A uniformly random length-`n` sequence over the system's alphabet.
pub fn random_input<R: Rng + ?Sized>(
    alphabet: &Alphabet,
    n: usize,
    rng: &mut R,
) -> Result<InputSequence, MachineError> {
    let mut buf = vec![0; n];
    fill_random(alphabet.len(), &mut buf, rng);
    InputSequence::new(buf)
}

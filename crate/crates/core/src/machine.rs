//! Deterministic Mealy machines with a designated set of safe states.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::sequence::{sequence_space_u64, Alphabet, InputSequence, Odometer};

/// Index of a state inside its [`MealyMachine`].
pub type StateId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error("symbol `{0}` declared twice")]
    DuplicateSymbol(String),
    #[error("state `{0}` declared twice")]
    DuplicateState(String),
    #[error("unknown input symbol `{0}`")]
    UnknownSymbol(String),
    #[error("input symbol index {0} is outside the alphabet")]
    SymbolOutOfRange(usize),
    #[error("undeclared {kind} `{name}`")]
    Undeclared { kind: &'static str, name: String },
    #[error("missing transition for state `{state}` on input `{input}`")]
    MissingTransition { state: String, input: String },
    #[error("transition for state `{state}` on input `{input}` defined twice")]
    DuplicateTransition { state: String, input: String },
    #[error("initial state `{0}` is not a declared state")]
    UnknownInitial(String),
    #[error("safe state `{0}` is not a declared state")]
    UnknownSafeState(String),
    #[error("machine has no states")]
    NoStates,
    #[error("input sequence is empty")]
    EmptySequence,
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("enumerating {alphabet}^{n} sequences exceeds the cap of {cap}")]
    EnumerationCap { alphabet: usize, n: usize, cap: u64 },
}

/// Outcome of running one input sequence from the initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub final_state: StateId,
    pub output_trace: Vec<usize>,
    pub safe: bool,
}

/// A total, deterministic Mealy machine `(S, I, O, transition, output, q0)`
/// together with its safe states.
///
/// Transition and output tables are dense, indexed by `state * |I| + input`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MealyMachine {
    states: Vec<String>,
    inputs: Alphabet,
    outputs: Alphabet,
    transition: Vec<StateId>,
    output_fn: Vec<usize>,
    initial: StateId,
    safe: Vec<bool>,
}

impl MealyMachine {
    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state_name(&self, state: StateId) -> &str {
        &self.states[state]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name)
    }

    pub fn inputs(&self) -> &Alphabet {
        &self.inputs
    }

    pub fn outputs(&self) -> &Alphabet {
        &self.outputs
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_safe_state(&self, state: StateId) -> bool {
        self.safe[state]
    }

    pub fn safe_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.states.len()).filter(|&s| self.safe[s])
    }

    #[inline]
    pub fn next_state(&self, input: usize, state: StateId) -> StateId {
        self.transition[state * self.inputs.len() + input]
    }

    #[inline]
    pub fn output(&self, input: usize, state: StateId) -> usize {
        self.output_fn[state * self.inputs.len() + input]
    }

    fn check_symbols(&self, seq: &[usize]) -> Result<(), MachineError> {
        match seq.iter().find(|&&s| !self.inputs.contains(s)) {
            Some(&bad) => Err(MachineError::SymbolOutOfRange(bad)),
            None => Ok(()),
        }
    }

    /// Folds the transition function over `seq` starting at the initial state.
    pub fn trace(&self, seq: &InputSequence) -> Result<RunResult, MachineError> {
        self.trace_from(self.initial, seq.symbols())
    }

    /// Like [`trace`](Self::trace) but from an arbitrary start state.
    pub fn trace_from(&self, start: StateId, seq: &[usize]) -> Result<RunResult, MachineError> {
        self.check_symbols(seq)?;
        let mut state = start;
        let mut output_trace = Vec::with_capacity(seq.len());
        for &input in seq {
            output_trace.push(self.output(input, state));
            state = self.next_state(input, state);
        }
        Ok(RunResult {
            final_state: state,
            output_trace,
            safe: self.safe[state],
        })
    }

    /// Final state reached from `q0`. Symbols must already be in range.
    #[inline]
    pub fn final_state(&self, seq: &[usize]) -> StateId {
        seq.iter()
            .fold(self.initial, |state, &input| self.next_state(input, state))
    }

    /// Safety verdict of `seq` without building an output trace. Symbols must
    /// already be in range.
    #[inline]
    pub fn ends_safe(&self, seq: &[usize]) -> bool {
        self.safe[self.final_state(seq)]
    }

    /// Every state reachable in exactly `n` steps, each with the first
    /// sequence (in canonical order) that reaches it.
    pub fn reachable_set(
        &self,
        n: usize,
        cap: u64,
    ) -> Result<BTreeMap<StateId, InputSequence>, MachineError> {
        if n == 0 {
            return Err(MachineError::ZeroHorizon);
        }
        let k = self.inputs.len();
        match sequence_space_u64(k, n) {
            Some(total) if total <= cap => {}
            _ => {
                return Err(MachineError::EnumerationCap {
                    alphabet: k,
                    n,
                    cap,
                })
            }
        }
        let mut reached = BTreeMap::new();
        let mut odo = Odometer::new(k, n);
        while let Some(seq) = odo.current() {
            reached
                .entry(self.final_state(seq))
                .or_insert_with(|| InputSequence::new(seq.to_vec()).expect("n >= 1"));
            if reached.len() == self.states.len() {
                break;
            }
            odo.advance();
        }
        Ok(reached)
    }
}

/// Incremental constructor that validates every machine invariant in
/// [`build`](Self::build).
#[derive(Debug, Clone)]
pub struct MachineBuilder {
    inputs: Alphabet,
    outputs: Alphabet,
    states: Vec<String>,
    state_index: HashMap<String, StateId>,
    declared_states: bool,
    initial: Option<String>,
    safe: Vec<String>,
    edges: HashMap<(StateId, usize), (StateId, usize)>,
    edge_order: Vec<(StateId, usize)>,
}

impl MachineBuilder {
    pub fn new(inputs: Alphabet, outputs: Alphabet) -> Self {
        Self {
            inputs,
            outputs,
            states: Vec::new(),
            state_index: HashMap::new(),
            declared_states: false,
            initial: None,
            safe: Vec::new(),
            edges: HashMap::new(),
            edge_order: Vec::new(),
        }
    }

    /// Fixes the state set up front. Transitions mentioning other states are
    /// then rejected.
    pub fn states<I, S>(mut self, names: I) -> Result<Self, MachineError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        for name in names {
            let name = name.into();
            if self.state_index.contains_key(&name) {
                return Err(MachineError::DuplicateState(name));
            }
            self.state_index.insert(name.clone(), self.states.len());
            self.states.push(name);
        }
        self.declared_states = true;
        Ok(self)
    }

    pub fn initial(mut self, state: impl Into<String>) -> Self {
        self.initial = Some(state.into());
        self
    }

    pub fn safe<I, S>(mut self, states: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.safe.extend(states.into_iter().map(Into::into));
        self
    }

    fn intern(&mut self, name: &str) -> Result<StateId, MachineError> {
        if let Some(&id) = self.state_index.get(name) {
            return Ok(id);
        }
        if self.declared_states {
            return Err(MachineError::Undeclared {
                kind: "state",
                name: name.to_string(),
            });
        }
        let id = self.states.len();
        self.states.push(name.to_string());
        self.state_index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn transition(
        &mut self,
        from: &str,
        input: &str,
        to: &str,
        output: &str,
    ) -> Result<&mut Self, MachineError> {
        let input_id = self
            .inputs
            .index_of(input)
            .ok_or_else(|| MachineError::Undeclared {
                kind: "input",
                name: input.to_string(),
            })?;
        let output_id = self
            .outputs
            .index_of(output)
            .ok_or_else(|| MachineError::Undeclared {
                kind: "output",
                name: output.to_string(),
            })?;
        let from_id = self.intern(from)?;
        let to_id = self.intern(to)?;
        if self
            .edges
            .insert((from_id, input_id), (to_id, output_id))
            .is_some()
        {
            return Err(MachineError::DuplicateTransition {
                state: from.to_string(),
                input: input.to_string(),
            });
        }
        self.edge_order.push((from_id, input_id));
        Ok(self)
    }

    pub fn build(self) -> Result<MealyMachine, MachineError> {
        if self.states.is_empty() {
            return Err(MachineError::NoStates);
        }
        let initial_name = self.initial.ok_or_else(|| MachineError::Parse {
            line: 0,
            column: 0,
            message: "no initial state given".into(),
        })?;
        let initial = *self
            .state_index
            .get(&initial_name)
            .ok_or(MachineError::UnknownInitial(initial_name))?;
        let mut safe = vec![false; self.states.len()];
        for name in &self.safe {
            let id = self
                .state_index
                .get(name)
                .ok_or_else(|| MachineError::UnknownSafeState(name.clone()))?;
            safe[*id] = true;
        }
        let k = self.inputs.len();
        let mut transition = vec![0; self.states.len() * k];
        let mut output_fn = vec![0; self.states.len() * k];
        for (s, state) in self.states.iter().enumerate() {
            for i in 0..k {
                let (to, out) =
                    self.edges
                        .get(&(s, i))
                        .ok_or_else(|| MachineError::MissingTransition {
                            state: state.clone(),
                            input: self.inputs.name(i).unwrap_or_default().to_string(),
                        })?;
                transition[s * k + i] = *to;
                output_fn[s * k + i] = *out;
            }
        }
        Ok(MealyMachine {
            states: self.states,
            inputs: self.inputs,
            outputs: self.outputs,
            transition,
            output_fn,
            initial,
            safe,
        })
    }
}

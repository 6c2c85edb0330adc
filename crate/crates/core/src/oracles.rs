//! Ground truth for white-box machines and the Monte Carlo baseline.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bounds::safety_probability;
use crate::machine::{MachineError, MealyMachine};
use crate::par::{split_even, Parallelism};
use crate::seed::{derive_seed, rng_from_seed};
use crate::sequence::{decode_index, sequence_space, sequence_space_u64};
use crate::sul::{fill_random, SulError, SulFactory};

/// Default number of Monte Carlo shards.
pub const DEFAULT_SHARDS: usize = 8;

/// Exact number of safe sequences of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactCount {
    pub n: usize,
    pub safe_paths: BigUint,
    pub total_paths: BigUint,
    pub probability: f64,
}

impl ExactCount {
    fn new(n: usize, safe_paths: BigUint, total_paths: BigUint, alphabet: usize) -> Self {
        let probability = safety_probability(&safe_paths, alphabet, n).expect("safe <= total");
        Self {
            n,
            safe_paths,
            total_paths,
            probability,
        }
    }
}

/// Number of length-`n` paths from `q0` ending in each state.
pub fn path_counts(machine: &MealyMachine, n: usize) -> Vec<BigUint> {
    let states = machine.state_count();
    let k = machine.inputs().len();
    let mut counts = vec![BigUint::zero(); states];
    counts[machine.initial()] = BigUint::from(1u32);
    for _ in 0..n {
        let mut next = vec![BigUint::zero(); states];
        for (s, c) in counts.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
            for i in 0..k {
                next[machine.next_state(i, s)] += c;
            }
        }
        counts = next;
    }
    counts
}

/// Counts safe sequences by propagating path counts over `(step, state)`.
/// Runs in `O(n |S| |I|)` big-integer additions.
pub fn exact_count_dp(machine: &MealyMachine, n: usize) -> ExactCount {
    let counts = path_counts(machine, n);
    let safe: BigUint = machine.safe_states().map(|s| &counts[s]).sum();
    let k = machine.inputs().len();
    ExactCount::new(n, safe, sequence_space(k, n), k)
}

/// Counts sequences whose run never visits an unsafe state, including `q0`.
/// Agrees with [`exact_count_dp`] when unsafe states are absorbing.
pub fn exact_count_never_unsafe(machine: &MealyMachine, n: usize) -> ExactCount {
    let states = machine.state_count();
    let k = machine.inputs().len();
    let mut counts = vec![BigUint::zero(); states];
    if machine.is_safe_state(machine.initial()) {
        counts[machine.initial()] = BigUint::from(1u32);
    }
    for _ in 0..n {
        let mut next = vec![BigUint::zero(); states];
        for (s, c) in counts.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
            for i in 0..k {
                let to = machine.next_state(i, s);
                if machine.is_safe_state(to) {
                    next[to] += c;
                }
            }
        }
        counts = next;
    }
    let safe: BigUint = counts.iter().sum();
    ExactCount::new(n, safe, sequence_space(k, n), k)
}

/// Traces every sequence of `I^n` and counts safe finals.
pub fn exact_count_enumerate(
    machine: &MealyMachine,
    n: usize,
    cap: u64,
    par: Parallelism,
) -> Result<ExactCount, MachineError> {
    let k = machine.inputs().len();
    let total = match sequence_space_u64(k, n) {
        Some(t) if t <= cap => t,
        _ => {
            return Err(MachineError::EnumerationCap {
                alphabet: k,
                n,
                cap,
            })
        }
    };
    let tasks = if par.is_parallel() {
        (total / 4096).clamp(1, 256) as usize
    } else {
        1
    };
    let ranges = split_even(total, tasks);
    let safe: u64 = par
        .map(ranges.len(), |t| {
            let range = ranges[t].clone();
            if range.is_empty() {
                return 0;
            }
            let mut seq = vec![0; n];
            decode_index(range.start, k, &mut seq);
            let mut safe = 0u64;
            for _ in range {
                safe += u64::from(machine.ends_safe(&seq));
                for slot in seq.iter_mut().rev() {
                    *slot += 1;
                    if *slot < k {
                        break;
                    }
                    *slot = 0;
                }
            }
            safe
        })
        .into_iter()
        .sum();
    Ok(ExactCount::new(
        n,
        BigUint::from(safe),
        BigUint::from(total),
        k,
    ))
}

/// Hit ratio of uniformly random sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub samples: u64,
    pub safe_hits: u64,
    pub estimate: f64,
    /// `sqrt(p (1 - p) / samples)` with `p` the estimate.
    pub std_error: f64,
    pub seed: u64,
    pub shards: usize,
}

impl MonteCarloEstimate {
    fn from_hits(samples: u64, safe_hits: u64, seed: u64, shards: usize) -> Self {
        let estimate = safe_hits as f64 / samples as f64;
        let std_error = (estimate * (1.0 - estimate) / samples as f64).sqrt();
        Self {
            samples,
            safe_hits,
            estimate,
            std_error,
            seed,
            shards,
        }
    }

    /// Whether `value` lies within `k` standard errors of the estimate.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.estimate - value).abs() <= k * self.std_error
    }
}

/// Estimates the safety probability from `samples` uniform sequences.
///
/// The budget is split into `shards` parts, each drawn from its own adapter
/// and sub-seed; the merged result depends on `seed` and `shards` only.
pub fn monte_carlo<F>(
    factory: &F,
    n: usize,
    samples: u64,
    seed: u64,
    shards: usize,
    par: Parallelism,
) -> Result<MonteCarloEstimate, SulError>
where
    F: SulFactory + ?Sized,
{
    if samples == 0 || n == 0 {
        return Err(SulError::Config(
            "samples and horizon must be at least 1".into(),
        ));
    }
    let shards = shards.clamp(1, samples.to_usize().unwrap_or(usize::MAX));
    let ranges = split_even(samples, shards);
    let hits = par.try_map(shards, |shard| -> Result<u64, SulError> {
        let mut sul = factory.open()?;
        let k = sul.alphabet().len();
        let mut rng = rng_from_seed(derive_seed(seed, &format!("monte-carlo/shard-{shard}")));
        let mut buf = vec![0; n];
        let mut hits = 0;
        for _ in ranges[shard].clone() {
            fill_random(k, &mut buf, &mut rng);
            hits += u64::from(sul.is_safe(&buf)?);
        }
        Ok(hits)
    })?;
    Ok(MonteCarloEstimate::from_hits(
        samples,
        hits.into_iter().sum(),
        seed,
        shards,
    ))
}

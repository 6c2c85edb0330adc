//! Active learning of the safe-path set as a disjunction of monomials.
//!
//! Each round draws a random safe sequence, skips it if the current set
//! already implies it, and otherwise tries to turn each bound position into a
//! don't-care, keeping the relaxation only when the membership oracle
//! confirms that every sequence it admits is still safe.

use std::time::{Duration, Instant};

use log::{debug, warn};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::Rng;
use thiserror::Error;

use crate::monomial::{Monomial, MonomialSet};
use crate::seed::rng_from_seed;
use crate::sul::{fill_random, SulError, SystemUnderLearning};

/// Default per-call cap on oracle expansions.
pub const DEFAULT_ORACLE_CAP: u64 = 1_000_000;
/// Default cap on rejection-sampling draws per example.
pub const DEFAULT_MAX_SAMPLE_ATTEMPTS: u64 = 1_000_000;

/// How the membership oracle aggregates the verdicts of an expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleSemantics {
    /// True only if every expanded sequence is safe.
    #[default]
    AllSafe,
    /// True as soon as one expanded sequence is safe. Unsound: learned sets
    /// may cover unsafe sequences. Kept for comparison runs only.
    AnySafe,
}

impl std::str::FromStr for OracleSemantics {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all-safe" => Ok(Self::AllSafe),
            "any-safe" | "paper-literal" => Ok(Self::AnySafe),
            other => Err(format!("unknown oracle semantics `{other}`")),
        }
    }
}

impl std::fmt::Display for OracleSemantics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::AllSafe => "all-safe",
            Self::AnySafe => "any-safe",
        })
    }
}

#[derive(Debug, Clone)]
pub struct LearnerConfig {
    pub horizon: usize,
    /// Number of examples `L` drawn in total.
    pub sample_budget: u64,
    pub max_sample_attempts: u64,
    pub seed: u64,
    /// 1-indexed time steps in the order they are tried as don't-cares.
    /// `None` means ascending.
    pub generalization_order: Option<Vec<usize>>,
    pub oracle_semantics: OracleSemantics,
    pub oracle_cap: u64,
    /// Keep one [`LogEntry`] per appended monomial.
    pub record_log: bool,
}

impl LearnerConfig {
    pub fn new(horizon: usize, sample_budget: u64, seed: u64) -> Self {
        Self {
            horizon,
            sample_budget,
            max_sample_attempts: DEFAULT_MAX_SAMPLE_ATTEMPTS,
            seed,
            generalization_order: None,
            oracle_semantics: OracleSemantics::AllSafe,
            oracle_cap: DEFAULT_ORACLE_CAP,
            record_log: false,
        }
    }

    /// 0-indexed generalization order, validated.
    fn order(&self) -> Result<Vec<usize>, LearnError> {
        let Some(order) = &self.generalization_order else {
            return Ok((0..self.horizon).collect());
        };
        let mut seen = vec![false; self.horizon];
        for &step in order {
            if step == 0 || step > self.horizon || std::mem::replace(&mut seen[step - 1], true) {
                return Err(LearnError::Config(format!(
                    "generalization order must be a permutation of 1..={}",
                    self.horizon
                )));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(LearnError::Config(format!(
                "generalization order must be a permutation of 1..={}",
                self.horizon
            )));
        }
        Ok(order.iter().map(|s| s - 1).collect())
    }

    fn validate(&self) -> Result<(), LearnError> {
        if self.horizon == 0 {
            return Err(LearnError::Config("horizon must be at least 1".into()));
        }
        if self.sample_budget == 0 {
            return Err(LearnError::Config(
                "sample budget must be at least 1".into(),
            ));
        }
        if self.max_sample_attempts == 0 {
            return Err(LearnError::Config(
                "max sample attempts must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearnerStats {
    pub examples_drawn: u64,
    pub examples_skipped_implied: u64,
    pub sample_attempts: u64,
    pub oracle_calls: u64,
    pub oracle_sequence_queries: u64,
    /// Oracle calls refused because the expansion exceeded the cap.
    pub oracle_cap_hits: u64,
    pub wall_time: Duration,
}

impl LearnerStats {
    /// Queries the learner issued to the system.
    pub fn total_queries(&self) -> u64 {
        self.sample_attempts + self.oracle_sequence_queries
    }
}

/// One appended monomial and the oracle calls spent generalizing it.
#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub monomial: Monomial,
    pub oracle_calls: u64,
    pub oracle_sequence_queries: u64,
}

#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub set: MonomialSet,
    pub stats: LearnerStats,
    pub log: Vec<LogEntry>,
}

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("invalid learner configuration: {0}")]
    Config(String),
    #[error("no safe sequence found in {attempts} random draws")]
    SamplingCap { attempts: u64 },
    #[error(transparent)]
    Sul(#[from] SulError),
}

/// Draws uniform random sequences until one is safe and returns it as a fully
/// bound monomial, together with the number of draws used.
pub fn get_example<S, R>(
    sul: &mut S,
    n: usize,
    rng: &mut R,
    cap: u64,
) -> Result<(Monomial, u64), LearnError>
where
    S: SystemUnderLearning + ?Sized,
    R: Rng + ?Sized,
{
    let k = sul.alphabet().len();
    let mut buf = vec![0; n];
    for attempt in 1..=cap {
        fill_random(k, &mut buf, rng);
        if sul.is_safe(&buf)? {
            return Ok((Monomial::fully_bound(&buf), attempt));
        }
    }
    Err(LearnError::SamplingCap { attempts: cap })
}

/// Result of one oracle call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleAnswer {
    pub verdict: bool,
    /// Sequences sent to the system.
    pub queries: u64,
    /// The expansion exceeded the cap and nothing was queried.
    pub capped: bool,
}

/// Membership oracle: does `v` admit only safe sequences?
///
/// Under [`OracleSemantics::AllSafe`] this stops at the first unsafe
/// expansion. An expansion larger than `cap` is answered `false` without
/// querying; that means "keep the binding", not "unsafe".
pub fn oracle<S>(
    sul: &mut S,
    v: &Monomial,
    semantics: OracleSemantics,
    cap: u64,
) -> Result<OracleAnswer, SulError>
where
    S: SystemUnderLearning + ?Sized,
{
    let k = sul.alphabet().len();
    let size = v.expansion_size(k);
    if size > BigUint::from(cap) {
        warn!(
            "oracle expansion of {} sequences exceeds cap {cap}; keeping binding",
            size.to_u64()
                .map_or_else(|| size.to_string(), |s| s.to_string())
        );
        return Ok(OracleAnswer {
            verdict: false,
            queries: 0,
            capped: true,
        });
    }
    let mut expansion = v.expand(k);
    let mut queries = 0;
    while let Some(seq) = expansion.peek() {
        let safe = sul.is_safe(seq)?;
        queries += 1;
        match (semantics, safe) {
            (OracleSemantics::AllSafe, false) => {
                return Ok(OracleAnswer {
                    verdict: false,
                    queries,
                    capped: false,
                })
            }
            (OracleSemantics::AnySafe, true) => {
                return Ok(OracleAnswer {
                    verdict: true,
                    queries,
                    capped: false,
                })
            }
            _ => {}
        }
        expansion.advance();
    }
    Ok(OracleAnswer {
        verdict: semantics == OracleSemantics::AllSafe,
        queries,
        capped: false,
    })
}

/// Learns the set of generalized safe paths of length `cfg.horizon` from
/// `cfg.sample_budget` random safe examples.
pub fn learn_safe_set<S>(sul: &mut S, cfg: &LearnerConfig) -> Result<LearnOutcome, LearnError>
where
    S: SystemUnderLearning + ?Sized,
{
    cfg.validate()?;
    let order = cfg.order()?;
    let started = Instant::now();
    let mut rng = rng_from_seed(cfg.seed);
    let mut set = MonomialSet::new(cfg.horizon);
    let mut stats = LearnerStats::default();
    let mut log = Vec::new();

    for _ in 0..cfg.sample_budget {
        let (mut v, attempts) = get_example(sul, cfg.horizon, &mut rng, cfg.max_sample_attempts)?;
        stats.examples_drawn += 1;
        stats.sample_attempts += attempts;
        if set.implies(&v).expect("uniform horizon") {
            stats.examples_skipped_implied += 1;
            continue;
        }
        let mut calls = 0;
        let mut queries = 0;
        for &pos in &order {
            if v.binding(pos).is_none() {
                continue;
            }
            let candidate = v.unbind(pos);
            let answer = oracle(sul, &candidate, cfg.oracle_semantics, cfg.oracle_cap)?;
            calls += 1;
            queries += answer.queries;
            stats.oracle_cap_hits += u64::from(answer.capped);
            if answer.verdict {
                v = candidate;
            }
        }
        stats.oracle_calls += calls;
        stats.oracle_sequence_queries += queries;
        debug!(
            "appending monomial with {} bindings after {calls} oracle calls",
            v.len()
        );
        if cfg.record_log {
            log.push(LogEntry {
                monomial: v.clone(),
                oracle_calls: calls,
                oracle_sequence_queries: queries,
            });
        }
        set.insert(v).expect("uniform horizon");
    }

    stats.wall_time = started.elapsed();
    Ok(LearnOutcome { set, stats, log })
}

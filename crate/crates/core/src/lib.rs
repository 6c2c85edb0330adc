//! Estimate, with PAC confidence, the probability that a black-box system
//! with a Mealy-machine abstraction ends in a safe state after `n` inputs.
//!
//! The estimate comes from actively learning a set of generalized safe paths
//! ([`monomial::MonomialSet`]) by sampling safe runs and widening them with
//! membership queries ([`learner`]), then counting the paths the set covers
//! and relating the sample budget to a confidence level ([`bounds`]).
//! [`oracles`] provides exact and Monte Carlo baselines; [`analysis`] ties it
//! all together.

pub mod analysis;
pub mod bounds;
pub mod error;
pub mod learner;
pub mod machine;
pub mod model_file;
pub mod models;
pub mod monomial;
pub mod oracles;
pub mod par;
pub mod seed;
pub mod sequence;
pub mod sul;

pub use analysis::{analyze, reproduce_table, AnalysisOptions, AnalysisReport, Budget, Target};
pub use error::{Error, ErrorKind};
pub use learner::{learn_safe_set, LearnerConfig, OracleSemantics};
pub use machine::{MachineError, MealyMachine, RunResult, StateId};
pub use model_file::{parse_model, to_model_text};
pub use monomial::{Monomial, MonomialSet};
pub use par::Parallelism;
pub use sequence::{Alphabet, InputSequence};
pub use sul::{MachineSul, SystemUnderLearning};

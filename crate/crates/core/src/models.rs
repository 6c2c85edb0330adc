//! Bundled case-study machines and random machines for property tests.

use std::collections::BTreeMap;
use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::machine::{MachineBuilder, MachineError, MealyMachine};
use crate::model_file::parse_model;
use crate::sequence::Alphabet;

/// Environment variable naming a directory of `.machine` files that shadows
/// the bundled catalog.
pub const MODEL_DIR_ENV: &str = "MEALY_PAC_MODELS";

const BUNDLED: &[(&str, &str)] = &[
    (
        "alks_without",
        include_str!("../models/alks_without.machine"),
    ),
    ("alks_with", include_str!("../models/alks_with.machine")),
    ("coffee", include_str!("../models/coffee.machine")),
    ("all_safe", include_str!("../models/all_safe.machine")),
    ("none_safe", include_str!("../models/none_safe.machine")),
];

/// Source text of a bundled model, by name (without the `.machine` suffix).
pub fn bundled(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".machine").unwrap_or(name);
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("model `{0}` not found on disk, in ${MODEL_DIR_ENV}, or in the bundled catalog")]
    NotFound(String),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Invalid { path: String, source: MachineError },
}

/// Named model files: bundled ones, optionally shadowed by a directory.
#[derive(Debug, Clone, Default)]
pub struct ModelCatalog {
    dir: Option<PathBuf>,
}

impl ModelCatalog {
    /// Catalog honouring [`MODEL_DIR_ENV`].
    pub fn from_env() -> Self {
        Self {
            dir: env::var_os(MODEL_DIR_ENV).map(PathBuf::from),
        }
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(dir.into()),
        }
    }

    /// Resolves `spec` as a file path, then as a name in the model directory,
    /// then as a bundled model. Returns the display name and the source text.
    pub fn load_text(&self, spec: &str) -> Result<(String, String), CatalogError> {
        let path = Path::new(spec);
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or(spec)
            .to_string();
        let read = |p: &Path| {
            fs::read_to_string(p).map_err(|source| CatalogError::Io {
                path: p.to_path_buf(),
                source,
            })
        };
        if path.is_file() {
            return Ok((stem, read(path)?));
        }
        if let Some(dir) = &self.dir {
            for candidate in [dir.join(spec), dir.join(format!("{stem}.machine"))] {
                if candidate.is_file() {
                    return Ok((stem, read(&candidate)?));
                }
            }
        }
        bundled(&stem)
            .map(|t| (stem.clone(), t.to_string()))
            .ok_or_else(|| CatalogError::NotFound(spec.to_string()))
    }

    pub fn load(&self, spec: &str) -> Result<(String, MealyMachine), CatalogError> {
        let (name, text) = self.load_text(spec)?;
        let machine = parse_model(&text).map_err(|source| CatalogError::Invalid {
            path: spec.to_string(),
            source,
        })?;
        Ok((name, machine))
    }

    /// Every bundled model, parsed.
    pub fn all_bundled(&self) -> Result<BTreeMap<String, MealyMachine>, CatalogError> {
        bundled_names()
            .map(|n| self.load(n))
            .collect::<Result<BTreeMap<_, _>, _>>()
    }
}

/// The steering-system machine, with or without lane-keeping assist.
///
/// States `C`, `L`, `R` are safe; `A` is the out-of-lane alarm state. Without
/// assist `A` is absorbing, with assist every input leads from `A` back to `C`.
pub fn build_alks(with_assist: bool) -> MealyMachine {
    let inputs = Alphabet::new(["l", "r", "s"]).expect("static alphabet");
    let outputs = Alphabet::new(["ok", "alarm"]).expect("static alphabet");
    let mut b = MachineBuilder::new(inputs, outputs)
        .states(["C", "L", "R", "A"])
        .expect("distinct states")
        .initial("C")
        .safe(["C", "L", "R"]);
    let edges = [
        ("C", "l", "L", "ok"),
        ("C", "r", "R", "ok"),
        ("C", "s", "C", "ok"),
        ("L", "l", "A", "alarm"),
        ("L", "r", "C", "ok"),
        ("L", "s", "L", "ok"),
        ("R", "l", "C", "ok"),
        ("R", "r", "A", "alarm"),
        ("R", "s", "R", "ok"),
    ];
    for (from, input, to, out) in edges {
        b.transition(from, input, to, out).expect("static edge");
    }
    for input in ["l", "r", "s"] {
        if with_assist {
            b.transition("A", input, "C", "ok").expect("static edge");
        } else {
            b.transition("A", input, "A", "alarm").expect("static edge");
        }
    }
    b.build().expect("ALKS machine is total")
}

/// Reconstructed coffee machine (bundled as `coffee.machine`).
pub fn build_coffee() -> MealyMachine {
    parse_model(bundled("coffee").expect("bundled")).expect("bundled model is valid")
}

fn uniform_machine(states: usize, alphabet: usize, safe: bool) -> MealyMachine {
    let inputs = Alphabet::new((0..alphabet.max(1)).map(|i| format!("i{i}"))).expect("distinct");
    let out = if safe { "ok" } else { "alarm" };
    let outputs = Alphabet::new([out]).expect("static");
    let names: Vec<String> = (0..states.max(1)).map(|s| format!("q{s}")).collect();
    let mut b = MachineBuilder::new(inputs, outputs)
        .states(names.clone())
        .expect("distinct")
        .initial("q0")
        .safe(if safe { names.clone() } else { Vec::new() });
    for (s, name) in names.iter().enumerate() {
        for i in 0..alphabet.max(1) {
            let to = &names[(s + i + 1) % names.len()];
            b.transition(name, &format!("i{i}"), to, out)
                .expect("declared");
        }
    }
    b.build().expect("total by construction")
}

/// Cyclic machine in which every state is safe.
pub fn all_safe(states: usize, alphabet: usize) -> MealyMachine {
    uniform_machine(states, alphabet, true)
}

/// Cyclic machine in which no state is safe.
pub fn none_safe(states: usize, alphabet: usize) -> MealyMachine {
    uniform_machine(states, alphabet, false)
}

/// Parameters for [`random_machine`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomMachineParams {
    pub states: usize,
    pub alphabet: usize,
    /// Probability that a non-initial state is unsafe.
    pub unsafe_fraction: f64,
    /// Make every unsafe state a sink (all inputs self-loop).
    pub absorbing_unsafe: bool,
    pub seed: u64,
}

/// Machine with a uniformly random total transition function.
///
/// The initial state is always safe. Each transition outputs `alarm` when its
/// target is unsafe and `ok` otherwise, so the last output of a run agrees
/// with the state label of its final state.
pub fn random_machine(params: RandomMachineParams) -> MealyMachine {
    let states = params.states.max(1);
    let alphabet = params.alphabet.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let safe: Vec<bool> = (0..states)
        .map(|s| s == 0 || !rng.random_bool(params.unsafe_fraction.clamp(0.0, 1.0)))
        .collect();
    let names: Vec<String> = (0..states).map(|s| format!("q{s}")).collect();
    let inputs = Alphabet::new((0..alphabet).map(|i| format!("i{i}"))).expect("distinct");
    let outputs = Alphabet::new(["ok", "alarm"]).expect("static");
    let mut b = MachineBuilder::new(inputs, outputs)
        .states(names.clone())
        .expect("distinct")
        .initial("q0")
        .safe(
            names
                .iter()
                .zip(&safe)
                .filter(|(_, &s)| s)
                .map(|(n, _)| n.clone()),
        );
    for s in 0..states {
        for i in 0..alphabet {
            let to = if params.absorbing_unsafe && !safe[s] {
                s
            } else {
                rng.random_range(0..states)
            };
            let out = if safe[to] { "ok" } else { "alarm" };
            b.transition(&names[s], &format!("i{i}"), &names[to], out)
                .expect("declared");
        }
    }
    b.build().expect("total by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_model_parses() {
        let all = ModelCatalog::default().all_bundled().unwrap();
        assert_eq!(all.len(), BUNDLED.len());
        assert_eq!(all["alks_with"], build_alks(true));
    }

    #[test]
    fn alks_variants_differ_only_leaving_a() {
        let with = build_alks(true);
        let without = build_alks(false);
        let a = without.state_id("A").unwrap();
        let mut differing = 0;
        for s in 0..with.state_count() {
            for i in 0..3 {
                let same = with.next_state(i, s) == without.next_state(i, s)
                    && with.output(i, s) == without.output(i, s);
                if !same {
                    assert_eq!(s, a);
                    differing += 1;
                }
            }
        }
        assert_eq!(differing, 3);
    }

    #[test]
    fn random_machine_is_seed_deterministic() {
        let p = RandomMachineParams {
            states: 6,
            alphabet: 3,
            unsafe_fraction: 0.3,
            absorbing_unsafe: true,
            seed: 11,
        };
        assert_eq!(random_machine(p), random_machine(p));
        let other = random_machine(RandomMachineParams { seed: 12, ..p });
        assert_ne!(random_machine(p), other);
    }

    #[test]
    fn absorbing_unsafe_states_self_loop() {
        let m = random_machine(RandomMachineParams {
            states: 8,
            alphabet: 2,
            unsafe_fraction: 0.5,
            absorbing_unsafe: true,
            seed: 3,
        });
        for s in (0..m.state_count()).filter(|&s| !m.is_safe_state(s)) {
            assert!((0..2).all(|i| m.next_state(i, s) == s));
        }
    }

    #[test]
    fn catalog_resolves_names_and_paths() {
        let cat = ModelCatalog::default();
        let (name, m) = cat.load("alks_without.machine").unwrap();
        assert_eq!(name, "alks_without");
        assert_eq!(m, build_alks(false));
        assert!(matches!(cat.load("nope"), Err(CatalogError::NotFound(_))));

        let dir = std::env::temp_dir().join(format!("mealy-pac-cat-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        fs::write(
            dir.join("alks_without.machine"),
            bundled("alks_with").unwrap(),
        )
        .unwrap();
        let shadowed = ModelCatalog::with_dir(&dir).load("alks_without").unwrap().1;
        assert_eq!(shadowed, build_alks(true));
        fs::remove_dir_all(&dir).unwrap();
    }
}

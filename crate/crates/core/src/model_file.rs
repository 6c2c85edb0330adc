//! Line-oriented `.machine` model files.
//!
//! ```text
//! inputs: l r s
//! outputs: ok alarm
//! initial: C
//! safe: C L R
//! # state, input -> state / output
//! C l -> L / ok
//! ```
//!
//! An optional `states:` header fixes the state set; without it, states are
//! collected from transition lines in order of first appearance. Exactly one
//! transition line per (state, input) pair is required.

use std::fmt::Write as _;

use crate::machine::{MachineBuilder, MachineError, MealyMachine};
use crate::sequence::Alphabet;

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (col, (byte, ch)) in line.char_indices().enumerate() {
        if ch.is_whitespace() {
            if let Some((b, c)) = start.take() {
                tokens.push(Token {
                    text: &line[b..byte],
                    column: c + 1,
                });
            }
        } else if start.is_none() {
            start = Some((byte, col));
        }
    }
    if let Some((b, c)) = start {
        tokens.push(Token {
            text: &line[b..],
            column: c + 1,
        });
    }
    tokens
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> MachineError {
    MachineError::Parse {
        line,
        column,
        message: message.into(),
    }
}

#[derive(Default)]
struct Header {
    inputs: Option<Vec<String>>,
    outputs: Option<Vec<String>>,
    states: Option<Vec<String>>,
    initial: Option<String>,
    safe: Option<Vec<String>>,
}

/// Parses and validates a model file.
pub fn parse_model(text: &str) -> Result<MealyMachine, MachineError> {
    let mut header = Header::default();
    let mut builder: Option<MachineBuilder> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or_default();
        let tokens = tokenize(line);
        let Some(first) = tokens.first() else {
            continue;
        };

        if let Some(key) = first.text.strip_suffix(':') {
            if builder.is_some() {
                return Err(parse_err(
                    line_no,
                    first.column,
                    format!("header `{key}:` after the first transition line"),
                ));
            }
            let values: Vec<String> = tokens[1..].iter().map(|t| t.text.to_string()).collect();
            let slot = match key {
                "inputs" => &mut header.inputs,
                "outputs" => &mut header.outputs,
                "states" => &mut header.states,
                "safe" => &mut header.safe,
                "initial" => {
                    if values.len() != 1 {
                        return Err(parse_err(
                            line_no,
                            first.column,
                            "`initial:` takes exactly one state",
                        ));
                    }
                    if header.initial.replace(values[0].clone()).is_some() {
                        return Err(parse_err(line_no, first.column, "duplicate `initial:`"));
                    }
                    continue;
                }
                other => {
                    return Err(parse_err(
                        line_no,
                        first.column,
                        format!("unknown header `{other}:`"),
                    ))
                }
            };
            if slot.replace(values).is_some() {
                return Err(parse_err(
                    line_no,
                    first.column,
                    format!("duplicate `{key}:`"),
                ));
            }
            continue;
        }

        if tokens.len() != 6 || tokens[2].text != "->" || tokens[4].text != "/" {
            let column = tokens
                .iter()
                .enumerate()
                .find(|(i, t)| match i {
                    2 => t.text != "->",
                    4 => t.text != "/",
                    _ => false,
                })
                .map(|(_, t)| t.column)
                .unwrap_or_else(|| tokens.last().map_or(1, |t| t.column));
            return Err(parse_err(
                line_no,
                column,
                "expected `STATE INPUT -> STATE / OUTPUT`",
            ));
        }

        if builder.is_none() {
            builder = Some(start_builder(&mut header, line_no)?);
        }
        let b = builder.as_mut().expect("initialised above");
        b.transition(
            tokens[0].text,
            tokens[1].text,
            tokens[3].text,
            tokens[5].text,
        )?;
    }

    let builder = match builder {
        Some(b) => b,
        None => start_builder(&mut header, text.lines().count().max(1))?,
    };
    builder.build()
}

fn start_builder(header: &mut Header, line_no: usize) -> Result<MachineBuilder, MachineError> {
    let inputs = header
        .inputs
        .take()
        .ok_or_else(|| parse_err(line_no, 1, "missing `inputs:` header"))?;
    let outputs = header
        .outputs
        .take()
        .ok_or_else(|| parse_err(line_no, 1, "missing `outputs:` header"))?;
    let initial = header
        .initial
        .take()
        .ok_or_else(|| parse_err(line_no, 1, "missing `initial:` header"))?;
    let mut b = MachineBuilder::new(Alphabet::new(inputs)?, Alphabet::new(outputs)?)
        .initial(initial)
        .safe(header.safe.take().unwrap_or_default());
    if let Some(states) = header.states.take() {
        b = b.states(states)?;
    }
    Ok(b)
}

/// Writes a machine in model-file syntax, with an explicit `states:` header.
pub fn to_model_text(m: &MealyMachine) -> String {
    let mut out = String::new();
    let safe: Vec<&str> = m.safe_states().map(|s| m.state_name(s)).collect();
    let _ = writeln!(out, "inputs: {}", m.inputs());
    let _ = writeln!(out, "outputs: {}", m.outputs());
    let _ = writeln!(out, "states: {}", m.states().join(" "));
    let _ = writeln!(out, "initial: {}", m.state_name(m.initial()));
    let _ = writeln!(out, "safe: {}", safe.join(" "));
    for s in 0..m.state_count() {
        for i in 0..m.inputs().len() {
            let _ = writeln!(
                out,
                "{} {} -> {} / {}",
                m.state_name(s),
                m.inputs().name(i).unwrap_or_default(),
                m.state_name(m.next_state(i, s)),
                m.outputs().name(m.output(i, s)).unwrap_or_default(),
            );
        }
    }
    out
}

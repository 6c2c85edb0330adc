//! Newline-delimited text protocol for black-box systems.
//!
//! ```text
//! -> ALPHABET            <- OK l r s
//! -> RESET               <- OK
//! -> STEP l              <- OUT ok
//! -> STEP l              <- OUT alarm
//! ```
//!
//! The client sends one `RESET` before each sequence and classifies the run
//! by the last `OUT` token. Anything else on the wire is a transport error.

use std::collections::BTreeSet;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use log::{debug, warn};

use super::{check_query, SulError, SystemUnderLearning};
use crate::machine::MealyMachine;
use crate::sequence::Alphabet;

/// Answers protocol requests for one connection until EOF or `QUIT`.
pub fn serve<R: BufRead, W: Write>(
    machine: &MealyMachine,
    reader: R,
    mut writer: W,
) -> io::Result<()> {
    let mut state = machine.initial();
    for line in reader.lines() {
        let line = line?;
        let mut parts = line.split_whitespace();
        let reply = match (parts.next(), parts.next(), parts.next()) {
            (None, _, _) => continue,
            (Some("ALPHABET"), None, _) => format!("OK {}", machine.inputs()),
            (Some("RESET"), None, _) => {
                state = machine.initial();
                "OK".to_string()
            }
            (Some("STEP"), Some(symbol), None) => match machine.inputs().index_of(symbol) {
                Some(input) => {
                    let out = machine.output(input, state);
                    state = machine.next_state(input, state);
                    format!("OUT {}", machine.outputs().name(out).unwrap_or_default())
                }
                None => format!("ERR unknown input {symbol}"),
            },
            (Some("QUIT"), None, _) => {
                writer.write_all(b"OK\n")?;
                writer.flush()?;
                return Ok(());
            }
            _ => format!("ERR bad request {line}"),
        };
        // One write per reply: several small writes on a socket interact badly
        // with Nagle and delayed ACKs.
        writer.write_all(format!("{reply}\n").as_bytes())?;
        writer.flush()?;
    }
    Ok(())
}

/// Serves every accepted connection on its own thread. Returns only on an
/// accept error.
pub fn serve_tcp(machine: Arc<MealyMachine>, listener: TcpListener) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        if let Err(e) = stream.set_nodelay(true) {
            debug!("set_nodelay: {e}");
        }
        let machine = Arc::clone(&machine);
        thread::spawn(move || {
            let reader = match stream.try_clone() {
                Ok(s) => BufReader::new(s),
                Err(e) => {
                    warn!("cloning connection: {e}");
                    return;
                }
            };
            if let Err(e) = serve(&machine, reader, stream) {
                debug!("connection closed: {e}");
            }
        });
    }
    Ok(())
}

/// Where a black-box system lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// A program speaking the protocol on stdin/stdout. Arguments are split on
    /// whitespace.
    Command(String),
    /// A `host:port` TCP address.
    Tcp(String),
}

#[derive(Debug, Clone)]
pub struct BlackBoxConfig {
    pub endpoint: Endpoint,
    /// Output tokens that mark a run as unsafe when they are the last output.
    pub unsafe_outputs: BTreeSet<String>,
    pub timeout: Duration,
    pub max_retries: u32,
}

impl BlackBoxConfig {
    pub fn new<I, S>(endpoint: Endpoint, unsafe_outputs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            endpoint,
            unsafe_outputs: unsafe_outputs.into_iter().map(Into::into).collect(),
            timeout: Duration::from_secs(5),
            max_retries: 2,
        }
    }

    pub fn validate(&self) -> Result<(), SulError> {
        if self.timeout.is_zero() {
            return Err(SulError::Config("timeout must be positive".into()));
        }
        if self.unsafe_outputs.is_empty() {
            return Err(SulError::Config(
                "at least one unsafe output is required".into(),
            ));
        }
        Ok(())
    }
}

struct Connection {
    writer: Box<dyn Write + Send>,
    lines: Receiver<io::Result<String>>,
    child: Option<Child>,
}

impl Connection {
    fn open(endpoint: &Endpoint) -> io::Result<Self> {
        match endpoint {
            Endpoint::Command(cmd) => {
                let mut parts = cmd.split_whitespace();
                let program = parts
                    .next()
                    .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "empty command"))?;
                let mut child = Command::new(program)
                    .args(parts)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Ok(Self {
                    writer: Box::new(stdin),
                    lines: spawn_reader(stdout),
                    child: Some(child),
                })
            }
            Endpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr)?;
                stream.set_nodelay(true)?;
                let reader = stream.try_clone()?;
                Ok(Self {
                    writer: Box::new(stream),
                    lines: spawn_reader(reader),
                    child: None,
                })
            }
        }
    }

    fn request(&mut self, line: &str, timeout: Duration) -> Result<String, String> {
        self.writer
            .write_all(format!("{line}\n").as_bytes())
            .map_err(|e| format!("write: {e}"))?;
        self.writer.flush().map_err(|e| format!("flush: {e}"))?;
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(reply)) => Ok(reply),
            Ok(Err(e)) => Err(format!("read: {e}")),
            Err(RecvTimeoutError::Timeout) => {
                Err(format!("no reply to `{line}` within {timeout:?}"))
            }
            Err(RecvTimeoutError::Disconnected) => Err("connection closed".into()),
        }
    }
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

fn spawn_reader<R: Read + Send + 'static>(source: R) -> Receiver<io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(source).lines() {
            let failed = line.is_err();
            if tx.send(line).is_err() || failed {
                break;
            }
        }
    });
    rx
}

fn fetch_alphabet(conn: &mut Connection, timeout: Duration) -> Result<Alphabet, String> {
    let reply = conn.request("ALPHABET", timeout)?;
    let symbols = reply
        .strip_prefix("OK")
        .filter(|rest| rest.is_empty() || rest.starts_with(' '))
        .ok_or_else(|| format!("unexpected reply to ALPHABET: `{reply}`"))?;
    Alphabet::new(symbols.split_whitespace()).map_err(|e| format!("bad alphabet: {e}"))
}

/// Client for a system reachable over the wire protocol.
///
/// Owns a single connection; open one adapter per concurrent worker.
pub struct BlackBoxSul {
    config: BlackBoxConfig,
    conn: Option<Connection>,
    alphabet: Alphabet,
    queries: u64,
}

impl std::fmt::Debug for BlackBoxSul {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlackBoxSul")
            .field("endpoint", &self.config.endpoint)
            .field("alphabet", &self.alphabet.names())
            .field("queries", &self.queries)
            .finish()
    }
}

impl BlackBoxSul {
    /// Connects and fetches the input alphabet, retrying up to
    /// `max_retries` times.
    pub fn connect(config: BlackBoxConfig) -> Result<Self, SulError> {
        config.validate()?;
        let mut last = String::new();
        for attempt in 0..=config.max_retries {
            match Connection::open(&config.endpoint).map_err(|e| format!("connect: {e}")) {
                Ok(mut conn) => match fetch_alphabet(&mut conn, config.timeout) {
                    Ok(alphabet) => {
                        return Ok(Self {
                            config,
                            conn: Some(conn),
                            alphabet,
                            queries: 0,
                        })
                    }
                    Err(e) => last = e,
                },
                Err(e) => last = e,
            }
            debug!("connect attempt {} failed: {last}", attempt + 1);
        }
        Err(SulError::Transport {
            attempts: config.max_retries + 1,
            message: last,
        })
    }

    pub fn config(&self) -> &BlackBoxConfig {
        &self.config
    }

    fn run_once(&mut self, seq: &[usize]) -> Result<bool, String> {
        if self.conn.is_none() {
            let mut conn =
                Connection::open(&self.config.endpoint).map_err(|e| format!("connect: {e}"))?;
            let alphabet = fetch_alphabet(&mut conn, self.config.timeout)?;
            if alphabet != self.alphabet {
                return Err(format!(
                    "alphabet changed on reconnect: `{}` vs `{}`",
                    alphabet, self.alphabet
                ));
            }
            self.conn = Some(conn);
        }
        let timeout = self.config.timeout;
        let conn = self.conn.as_mut().expect("connected above");
        let reply = conn.request("RESET", timeout)?;
        if reply != "OK" {
            return Err(format!("unexpected reply to RESET: `{reply}`"));
        }
        let mut last = String::new();
        for &symbol in seq {
            let name = self.alphabet.name(symbol).expect("checked by caller");
            let reply = conn.request(&format!("STEP {name}"), timeout)?;
            match reply.strip_prefix("OUT ") {
                Some(token) if !token.trim().is_empty() => last = token.trim().to_string(),
                _ => return Err(format!("unexpected reply to STEP {name}: `{reply}`")),
            }
        }
        Ok(!self.config.unsafe_outputs.contains(&last))
    }
}

impl SystemUnderLearning for BlackBoxSul {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn is_safe(&mut self, seq: &[usize]) -> Result<bool, SulError> {
        check_query(&self.alphabet, seq)?;
        let mut last = String::new();
        for attempt in 0..=self.config.max_retries {
            match self.run_once(seq) {
                Ok(verdict) => {
                    self.queries += 1;
                    return Ok(verdict);
                }
                Err(e) => {
                    debug!("query attempt {} failed: {e}", attempt + 1);
                    self.conn = None;
                    last = e;
                }
            }
        }
        Err(SulError::Transport {
            attempts: self.config.max_retries + 1,
            message: last,
        })
    }

    fn query_count(&self) -> u64 {
        self.queries
    }
}

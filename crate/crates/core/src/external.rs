//! Line-delimited JSON bridge to out-of-process engines.
//!
//! Each request is one JSON document on one line of the engine's stdin:
//!
//! ```text
//! {"mode":"analyze","times":[..],"elevations":[..],"constituents":[{"name":"M2","frequency":0.5058}],"trend":true}
//! {"mode":"predict","times":[..],"a0":..,"a1":..,"constituents":[{"name":"M2","frequency":..,"amplitude":..,"phase_deg":..}]}
//! ```
//!
//! and the engine answers with one line on stdout:
//!
//! ```text
//! {"a0":..,"a1":..,"constituents":[{"name":"M2","amplitude":..,"phase_deg":..}]}
//! {"elevations":[..]}
//! {"error":"message"}
//! ```
//!
//! Phases are in degrees. By default every request runs in a fresh process
//! whose stdin is closed after the request; persistent mode keeps one process
//! and exchanges one line per request.

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::engine::{EngineError, TapEngine, TapInput};
use crate::harmonic::{
    self, constituent_frequency, Constituent, ConstituentSet, FitConfig, TidalSolution, TimeSeries,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    InProcess,
    External,
}

/// Which engine a run drives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineHandle {
    pub kind: EngineKind,
    /// Program and arguments, for external engines.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub command: Vec<String>,
    pub timeout_s: f64,
    #[serde(default)]
    pub persistent: bool,
}

pub const DEFAULT_TIMEOUT_S: f64 = 30.0;

impl EngineHandle {
    pub fn in_process() -> Self {
        Self {
            kind: EngineKind::InProcess,
            command: Vec::new(),
            timeout_s: DEFAULT_TIMEOUT_S,
            persistent: false,
        }
    }

    pub fn external(command: Vec<String>, timeout_s: f64) -> Self {
        Self {
            kind: EngineKind::External,
            command,
            timeout_s,
            persistent: false,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.kind == EngineKind::External && self.command.is_empty() {
            return Err(EngineError::Failure(
                "external engine needs a command".to_string(),
            ));
        }
        if !(self.timeout_s.is_finite() && self.timeout_s > 0.0) {
            return Err(EngineError::Failure(format!(
                "timeout must be positive, got {}",
                self.timeout_s
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireConstituent {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Request {
    Analyze {
        times: Vec<f64>,
        elevations: Vec<f64>,
        constituents: Vec<WireConstituent>,
        trend: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_conditioning: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rayleigh_check: Option<bool>,
    },
    Predict {
        times: Vec<f64>,
        a0: f64,
        a1: f64,
        constituents: Vec<WireConstituent>,
    },
}

impl Request {
    pub fn analyze(input: &TapInput) -> Self {
        Request::Analyze {
            times: input.series.times().to_vec(),
            elevations: input.series.elevations().to_vec(),
            constituents: input
                .constituents
                .members()
                .iter()
                .map(|c| WireConstituent {
                    name: c.name.clone(),
                    frequency: Some(c.frequency),
                    amplitude: None,
                    phase_deg: None,
                })
                .collect(),
            trend: input.config.include_trend,
            min_conditioning: Some(input.config.min_conditioning),
            rayleigh_check: Some(input.config.rayleigh_check),
        }
    }

    pub fn predict(solution: &TidalSolution, times: &[f64]) -> Self {
        Request::Predict {
            times: times.to_vec(),
            a0: solution.a0,
            a1: solution.a1,
            constituents: solution
                .components
                .iter()
                .map(|c| WireConstituent {
                    name: c.name.clone(),
                    frequency: Some(c.frequency),
                    amplitude: Some(c.amplitude),
                    phase_deg: Some(c.phase_deg),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeResponse {
    pub a0: f64,
    #[serde(default)]
    pub a1: f64,
    pub constituents: Vec<WireConstituent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub elevations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ErrorResponse {
    error: String,
}

fn wire_set(constituents: &[WireConstituent]) -> Result<ConstituentSet, String> {
    let members = constituents
        .iter()
        .map(|c| {
            let frequency = match c.frequency {
                Some(f) => f,
                None => {
                    constituent_frequency(&c.name)
                        .map_err(|e| e.to_string())?
                        .frequency
                }
            };
            Constituent::new(c.name.clone(), frequency).map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, String>>()?;
    ConstituentSet::new(members).map_err(|e| e.to_string())
}

/// Answers one request line with `engine`. Failures become `{"error": ..}`.
pub fn serve_line(engine: &dyn TapEngine, line: &str) -> String {
    let reply = match serde_json::from_str::<Request>(line) {
        Err(e) => Err(format!("bad request: {e}")),
        Ok(Request::Analyze {
            times,
            elevations,
            constituents,
            trend,
            min_conditioning,
            rayleigh_check,
        }) => (|| {
            let series = TimeSeries::new(times, elevations).map_err(|e| e.to_string())?;
            let set = wire_set(&constituents)?;
            let defaults = FitConfig::with_trend(trend);
            let config = FitConfig {
                include_trend: trend,
                min_conditioning: min_conditioning.unwrap_or(defaults.min_conditioning),
                rayleigh_check: rayleigh_check.unwrap_or(defaults.rayleigh_check),
            };
            let sol = engine
                .analyze(&TapInput::new(series, set, config))
                .map_err(|e| e.to_string())?;
            Ok(serde_json::to_string(&AnalyzeResponse {
                a0: sol.a0,
                a1: sol.a1,
                constituents: sol
                    .components
                    .iter()
                    .map(|c| WireConstituent {
                        name: c.name.clone(),
                        frequency: Some(c.frequency),
                        amplitude: Some(c.amplitude),
                        phase_deg: Some(c.phase_deg),
                    })
                    .collect(),
            })
            .expect("responses serialize"))
        })(),
        Ok(Request::Predict {
            times,
            a0,
            a1,
            constituents,
        }) => (|| {
            let set = wire_set(&constituents)?;
            let polar = constituents
                .iter()
                .map(|c| match (c.amplitude, c.phase_deg) {
                    (Some(a), Some(p)) => Ok((a, p)),
                    _ => Err(format!("{}: amplitude and phase_deg are required", c.name)),
                })
                .collect::<Result<Vec<_>, String>>()?;
            let sol = TidalSolution::new(a0, a1, &set, &polar);
            let series = harmonic::predict(&sol, &times).map_err(|e| e.to_string())?;
            Ok(serde_json::to_string(&PredictResponse {
                elevations: series.elevations().to_vec(),
            })
            .expect("responses serialize"))
        })(),
    };
    reply.unwrap_or_else(|error| {
        serde_json::to_string(&ErrorResponse { error }).expect("responses serialize")
    })
}

/// Answers request lines from `input` until end of input.
pub fn serve<R: BufRead, W: Write>(
    engine: &dyn TapEngine,
    input: R,
    mut output: W,
) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(output, "{}", serve_line(engine, &line))?;
        output.flush()?;
    }
    Ok(())
}

/// Long-lived engine process for persistent mode.
struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    lines_read: usize,
}

impl Drop for Session {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// An engine running as a child process.
pub struct ExternalEngine {
    handle: EngineHandle,
    session: Mutex<Option<Session>>,
}

impl std::fmt::Debug for ExternalEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalEngine")
            .field("handle", &self.handle)
            .finish()
    }
}

impl ExternalEngine {
    pub fn new(handle: EngineHandle) -> Result<Self, EngineError> {
        handle.validate()?;
        if handle.kind != EngineKind::External {
            return Err(EngineError::Failure(
                "handle does not describe an external engine".to_string(),
            ));
        }
        Ok(Self {
            handle,
            session: Mutex::new(None),
        })
    }

    pub fn handle(&self) -> &EngineHandle {
        &self.handle
    }

    fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.handle.timeout_s)
    }

    fn spawn(&self) -> Result<Child, EngineError> {
        let (program, args) = self
            .handle
            .command
            .split_first()
            .expect("validated non-empty command");
        Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| EngineError::Failure(format!("cannot start '{program}': {e}")))
    }

    /// Sends one request and returns the response line with its 1-based
    /// number in the engine's output.
    fn exchange(&self, request: &Request) -> Result<(usize, String), EngineError> {
        let line = serde_json::to_string(request).expect("requests serialize");
        if self.handle.persistent {
            self.exchange_persistent(&line)
        } else {
            self.exchange_once(&line).map(|l| (1, l))
        }
    }

    fn exchange_once(&self, line: &str) -> Result<String, EngineError> {
        let mut child = self.spawn()?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let mut stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");

        let payload = format!("{line}\n");
        let writer = thread::spawn(move || {
            // a process that exits without reading closes the pipe; ignore it
            let _ = stdin.write_all(payload.as_bytes());
        });
        let err_reader = thread::spawn(move || {
            let mut s = String::new();
            let _ = stderr.read_to_string(&mut s);
            s
        });
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut s = String::new();
            let r = stdout.read_to_string(&mut s).map(|_| s);
            let _ = tx.send(r);
        });

        let output = match rx.recv_timeout(self.timeout()) {
            Ok(r) => r.map_err(|e| EngineError::Failure(format!("reading engine output: {e}")))?,
            Err(RecvTimeoutError::Timeout) | Err(RecvTimeoutError::Disconnected) => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(EngineError::Timeout {
                    seconds: self.handle.timeout_s,
                });
            }
        };
        let _ = writer.join();
        let status = child
            .wait()
            .map_err(|e| EngineError::Failure(format!("waiting for engine: {e}")))?;
        let stderr = err_reader.join().unwrap_or_default();
        if !status.success() {
            let tail = stderr.trim();
            return Err(EngineError::Failure(if tail.is_empty() {
                format!("engine exited with {status}")
            } else {
                format!("engine exited with {status}: {tail}")
            }));
        }
        Ok(output.lines().next().unwrap_or("").to_string())
    }

    fn exchange_persistent(&self, line: &str) -> Result<(usize, String), EngineError> {
        let mut guard = self.session.lock().unwrap_or_else(|p| p.into_inner());
        if guard.is_none() {
            let mut child = self.spawn()?;
            let stdin = child.stdin.take().expect("piped stdin");
            let stdout = child.stdout.take().expect("piped stdout");
            if let Some(mut stderr) = child.stderr.take() {
                thread::spawn(move || {
                    let _ = std::io::copy(&mut stderr, &mut std::io::sink());
                });
            }
            let (tx, rx) = mpsc::channel();
            thread::spawn(move || {
                for l in BufReader::new(stdout).lines() {
                    if tx.send(l).is_err() {
                        break;
                    }
                }
            });
            *guard = Some(Session {
                child,
                stdin,
                lines: rx,
                lines_read: 0,
            });
        }
        let session = guard.as_mut().expect("session started above");

        let sent = writeln!(session.stdin, "{line}").and_then(|_| session.stdin.flush());
        if let Err(e) = sent {
            *guard = None;
            return Err(EngineError::Failure(format!("engine stopped reading: {e}")));
        }
        match session.lines.recv_timeout(self.timeout()) {
            Ok(Ok(reply)) => {
                session.lines_read += 1;
                Ok((session.lines_read, reply))
            }
            Ok(Err(e)) => {
                *guard = None;
                Err(EngineError::Failure(format!("reading engine output: {e}")))
            }
            Err(RecvTimeoutError::Timeout) => {
                *guard = None;
                Err(EngineError::Timeout {
                    seconds: self.handle.timeout_s,
                })
            }
            Err(RecvTimeoutError::Disconnected) => {
                let status = session.child.wait().ok();
                *guard = None;
                Err(EngineError::Failure(match status {
                    Some(s) => format!("engine exited with {s}"),
                    None => "engine exited".to_string(),
                }))
            }
        }
    }

    /// Parses a response line, turning `{"error": ..}` into a failure.
    fn decode<T: for<'de> Deserialize<'de>>(number: usize, line: &str) -> Result<T, EngineError> {
        let protocol = |message: String| EngineError::Protocol {
            line: number,
            message,
        };
        if line.trim().is_empty() {
            return Err(protocol("empty response".to_string()));
        }
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| protocol(format!("{e}: {line}")))?;
        if let Some(msg) = value.get("error") {
            let msg = msg.as_str().map_or_else(|| msg.to_string(), str::to_string);
            return Err(EngineError::Failure(msg));
        }
        serde_json::from_value(value).map_err(|e| protocol(format!("{e}: {line}")))
    }

    pub fn predict(
        &self,
        solution: &TidalSolution,
        times: &[f64],
    ) -> Result<TimeSeries, EngineError> {
        let (number, line) = self.exchange(&Request::predict(solution, times))?;
        let resp: PredictResponse = Self::decode(number, &line)?;
        if resp.elevations.len() != times.len() {
            return Err(EngineError::Protocol {
                line: number,
                message: format!(
                    "expected {} elevations, got {}",
                    times.len(),
                    resp.elevations.len()
                ),
            });
        }
        TimeSeries::new(times.to_vec(), resp.elevations).map_err(|e| EngineError::Protocol {
            line: number,
            message: e.to_string(),
        })
    }
}

impl TapEngine for ExternalEngine {
    fn analyze(&self, input: &TapInput) -> Result<TidalSolution, EngineError> {
        let (number, line) = self.exchange(&Request::analyze(input))?;
        let resp: AnalyzeResponse = Self::decode(number, &line)?;
        let protocol = |message: String| EngineError::Protocol {
            line: number,
            message,
        };
        let mut polar = Vec::with_capacity(resp.constituents.len());
        let mut members = Vec::with_capacity(resp.constituents.len());
        for c in &resp.constituents {
            let (Some(a), Some(p)) = (c.amplitude, c.phase_deg) else {
                return Err(protocol(format!(
                    "{}: amplitude and phase_deg are required",
                    c.name
                )));
            };
            let frequency = c
                .frequency
                .or_else(|| input.constituents.get(&c.name).map(|k| k.frequency))
                .or_else(|| constituent_frequency(&c.name).ok().map(|k| k.frequency))
                .ok_or_else(|| protocol(format!("unknown constituent '{}'", c.name)))?;
            members.push(
                Constituent::new(c.name.clone(), frequency).map_err(|e| protocol(e.to_string()))?,
            );
            polar.push((a, p));
        }
        let set = ConstituentSet::new(members).map_err(|e| protocol(e.to_string()))?;
        Ok(TidalSolution::new(resp.a0, resp.a1, &set, &polar))
    }

    fn label(&self) -> String {
        format!("external:{}", self.handle.command.join(" "))
    }
}

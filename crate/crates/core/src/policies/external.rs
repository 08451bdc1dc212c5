//! Bridge to a policy running in a child process.
//!
//! The child reads newline-delimited JSON requests on stdin and answers each
//! with one line on stdout:
//!
//! ```text
//! > {"type":"reset"}
//! < {"ok":true}
//! > {"type":"act","step":12,"heading":1.5708,"channels":{"local_obstacle":[[0,1,...],...],...}}
//! < {"goal":[120,87]}
//! ```
//!
//! Goals are cells of the agent-centered observation window.

use super::baselines::NearestFrontier;
use super::{ExplorationPolicy, GlobalGoal, PolicyContext, PolicyError};
use crate::grid::Cell;
use crate::mapping::{ObservationStack, CHANNEL_NAMES};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExternalConfig {
    pub timeout_ms: u64,
    /// Side the observation channels are max-pooled to before sending.
    pub observation_side: usize,
}

impl Default for ExternalConfig {
    fn default() -> Self {
        Self {
            timeout_ms: 5000,
            observation_side: 64,
        }
    }
}

/// Formats a float with 6 significant digits in the shortest form that
/// round-trips; non-finite values become `null`.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return "null".to_string();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("valid float literal");
    format!("{rounded}")
}

/// Serializes an `act` request.
pub fn encode_act(step: usize, obs: &ObservationStack) -> String {
    let side = obs.side();
    let mut out = format!(
        "{{\"type\":\"act\",\"step\":{step},\"heading\":{},\"channels\":{{",
        format_float(obs.heading())
    );
    for (k, name) in CHANNEL_NAMES.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        write!(out, "\"{name}\":[").unwrap();
        for row in 0..side {
            if row > 0 {
                out.push(',');
            }
            out.push('[');
            for col in 0..side {
                if col > 0 {
                    out.push(',');
                }
                out.push_str(&format_float(obs.get(k, row, col) as f64));
            }
            out.push(']');
        }
        out.push(']');
    }
    out.push_str("}}");
    out
}

#[derive(Deserialize)]
struct GoalResponse {
    goal: [f64; 2],
}

#[derive(Deserialize)]
struct ResetResponse {
    ok: bool,
}

pub struct ExternalPolicy {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    config: ExternalConfig,
    broken: bool,
    fallback: NearestFrontier,
}

impl ExternalPolicy {
    /// Starts `command` through `sh -c`.
    pub fn spawn(command: &str, config: ExternalConfig) -> Result<Self, PolicyError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| PolicyError::Io(format!("cannot start `{command}`: {e}")))?;
        let stdout = child.stdout.take().expect("stdout is piped");
        let stdin = child.stdin.take();
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            child,
            stdin,
            lines: rx,
            config,
            broken: false,
            fallback: NearestFrontier,
        })
    }

    /// Whether a protocol error has switched the bridge to the fallback.
    pub fn is_broken(&self) -> bool {
        self.broken
    }

    fn exchange(&mut self, request: &str) -> Result<String, PolicyError> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| PolicyError::Io("stdin closed".into()))?;
        stdin
            .write_all(request.as_bytes())
            .and_then(|_| stdin.write_all(b"\n"))
            .and_then(|_| stdin.flush())
            .map_err(|e| PolicyError::Io(e.to_string()))?;
        match self.lines.recv_timeout(Duration::from_millis(self.config.timeout_ms)) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(PolicyError::Io(e.to_string())),
            Err(RecvTimeoutError::Timeout) => Err(PolicyError::Timeout(self.config.timeout_ms)),
            Err(RecvTimeoutError::Disconnected) => Err(PolicyError::Io("stream closed".into())),
        }
    }

    /// Asks the child for a goal without falling back.
    pub fn request_goal(&mut self, ctx: &PolicyContext<'_>) -> Result<GlobalGoal, PolicyError> {
        let full = ctx.observation();
        let side = self.config.observation_side.clamp(1, full.side());
        let obs = if side == full.side() { full.clone() } else { full.downsample(side) };
        let line = self.exchange(&encode_act(ctx.step, &obs))?;
        let resp: GoalResponse = serde_json::from_str(&line)
            .map_err(|e| PolicyError::MalformedResponse(format!("{e}: {line}")))?;
        let l = full.side() as f64;
        let [x, y] = resp.goal;
        if !(x.is_finite() && y.is_finite() && x >= 0.0 && y >= 0.0 && x < l && y < l) {
            return Err(PolicyError::MalformedResponse(format!(
                "goal [{x}, {y}] outside the {l}×{l} window"
            )));
        }
        // The observation window is centered on the agent.
        let half = (full.side() / 2) as f64;
        let max = (ctx.map.size() - 1) as f64;
        let gx = (ctx.agent.x as f64 - half + x.floor()).clamp(0.0, max);
        let gy = (ctx.agent.y as f64 - half + y.floor()).clamp(0.0, max);
        Ok(ctx.goal(Cell::new(gx as usize, gy as usize)))
    }

    fn fail(&mut self, err: &PolicyError) {
        log::warn!("external policy failed ({err}); using nearest frontier from now on");
        self.broken = true;
    }
}

impl ExplorationPolicy for ExternalPolicy {
    fn name(&self) -> &str {
        "external"
    }

    fn select_goal(&mut self, ctx: &PolicyContext<'_>) -> Result<GlobalGoal, PolicyError> {
        if !self.broken {
            match self.request_goal(ctx) {
                Ok(goal) => return Ok(goal),
                Err(e) => self.fail(&e),
            }
        }
        self.fallback.select_goal(ctx)
    }

    fn reset(&mut self) -> Result<(), PolicyError> {
        if self.broken {
            return Ok(());
        }
        let result = self.exchange("{\"type\":\"reset\"}").and_then(|line| {
            match serde_json::from_str::<ResetResponse>(&line) {
                Ok(ResetResponse { ok: true }) => Ok(()),
                _ => Err(PolicyError::MalformedResponse(line)),
            }
        });
        if let Err(e) = result {
            self.fail(&e);
        }
        Ok(())
    }
}

impl Drop for ExternalPolicy {
    fn drop(&mut self) {
        self.stdin.take();
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

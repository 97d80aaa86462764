//! Child-process evaluator: renders an argument template, launches the
//! simulator executable, and parses `metric:<name>=<value>` lines from its
//! standard output. Everything else the simulator prints is ignored, so
//! ordinary logging passes through harmlessly.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{EvalError, Evaluator};
use crate::param::{ArgumentVector, ParameterSpace, SimResult};

/// Declaration of an external simulator invocation. Each argument may embed
/// `{param:<name>}` and `{seed}` placeholders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalSimSpec {
    pub executable: PathBuf,
    pub args: Vec<String>,
    pub timeout_s: f64,
    pub expected_metrics: Vec<String>,
}

impl Default for ExternalSimSpec {
    fn default() -> Self {
        ExternalSimSpec {
            executable: PathBuf::new(),
            args: Vec::new(),
            timeout_s: 300.0,
            expected_metrics: Vec::new(),
        }
    }
}

/// Evaluator backed by one child process per invocation; no state is shared
/// between invocations.
#[derive(Debug, Clone)]
pub struct ExternalEvaluator {
    spec: ExternalSimSpec,
    param_names: Vec<String>,
}

impl ExternalEvaluator {
    /// Validates that every `{param:...}` placeholder in the template names a
    /// parameter of the space and that the timeout is positive.
    pub fn new(spec: ExternalSimSpec, space: &ParameterSpace) -> Result<Self, EvalError> {
        if !(spec.timeout_s > 0.0) {
            return Err(EvalError::Config(format!(
                "timeout_s = {} must be positive",
                spec.timeout_s
            )));
        }
        let param_names: Vec<String> =
            space.params().iter().map(|p| p.name().to_string()).collect();
        for arg in &spec.args {
            for name in placeholder_names(arg) {
                if !param_names.iter().any(|n| n == &name) {
                    return Err(EvalError::UnknownParameter(name));
                }
            }
        }
        Ok(ExternalEvaluator { spec, param_names })
    }

    /// Arguments with placeholders substituted. Values are rendered with 17
    /// significant digits so the external path parses back bit-identical
    /// floats.
    pub fn render_args(&self, args: &ArgumentVector, seed: u64) -> Vec<String> {
        self.spec
            .args
            .iter()
            .map(|template| {
                let mut rendered = template.replace("{seed}", &seed.to_string());
                for (name, value) in self.param_names.iter().zip(args.values()) {
                    let token = format!("{{param:{name}}}");
                    if rendered.contains(&token) {
                        rendered = rendered.replace(&token, &format!("{value:.16e}"));
                    }
                }
                rendered
            })
            .collect()
    }
}

fn placeholder_names(template: &str) -> Vec<String> {
    let mut names = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find("{param:") {
        let tail = &rest[start + 7..];
        match tail.find('}') {
            Some(end) => {
                names.push(tail[..end].to_string());
                rest = &tail[end + 1..];
            }
            None => break,
        }
    }
    names
}

/// Parse every well-formed `metric:<name>=<decimal>` line; all other lines
/// are ignored. Names are `[A-Za-z0-9_]+`.
pub fn parse_metric_lines(stdout: &str) -> BTreeMap<String, f64> {
    let mut metrics = BTreeMap::new();
    for line in stdout.lines() {
        let Some(rest) = line.trim_end().strip_prefix("metric:") else {
            continue;
        };
        let Some((name, value)) = rest.split_once('=') else {
            continue;
        };
        if name.is_empty() || !name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
            continue;
        }
        if let Ok(v) = value.parse::<f64>() {
            metrics.insert(name.to_string(), v);
        }
    }
    metrics
}

impl Evaluator for ExternalEvaluator {
    fn evaluate(&self, args: &ArgumentVector, seed: u64) -> Result<SimResult, EvalError> {
        let rendered = self.render_args(args, seed);
        let mut child = Command::new(&self.spec.executable)
            .args(&rendered)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| EvalError::Launch {
                executable: self.spec.executable.display().to_string(),
                reason: e.to_string(),
            })?;

        // Drain pipes on threads so a chatty child never blocks on a full
        // pipe while we are only polling its exit status.
        let mut stdout_pipe = child.stdout.take().expect("stdout piped");
        let mut stderr_pipe = child.stderr.take().expect("stderr piped");
        let out_reader = std::thread::spawn(move || {
            let mut buf = String::new();
            let _ = stdout_pipe.read_to_string(&mut buf);
            buf
        });
        let err_reader = std::thread::spawn(move || {
            let mut buf = String::new();
            let _ = stderr_pipe.read_to_string(&mut buf);
            buf
        });

        let deadline = Instant::now() + Duration::from_secs_f64(self.spec.timeout_s);
        let status = loop {
            match child.try_wait().map_err(|e| EvalError::Io(e.to_string()))? {
                Some(status) => break status,
                None if Instant::now() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(EvalError::Timeout {
                        timeout_s: self.spec.timeout_s,
                    });
                }
                None => std::thread::sleep(Duration::from_millis(5)),
            }
        };
        let stdout = out_reader.join().unwrap_or_default();
        let stderr = err_reader.join().unwrap_or_default();

        if !status.success() {
            let snippet: String = stderr.chars().take(200).collect();
            return Err(EvalError::NonZeroExit {
                status: status.to_string(),
                stderr: snippet,
            });
        }

        let parsed = parse_metric_lines(&stdout);
        let mut result = SimResult::new();
        for name in &self.spec.expected_metrics {
            match parsed.get(name) {
                Some(&v) => {
                    result.values.insert(name.clone(), v);
                }
                None => return Err(EvalError::MissingMetric(name.clone())),
            }
        }
        for (name, &v) in &parsed {
            if !self.spec.expected_metrics.iter().any(|m| m == name) {
                result.diagnostics.insert(name.clone(), v);
            }
        }
        Ok(result)
    }
}

//! Drives an external MILP solver as a subprocess.
//!
//! The model is serialized to an LP file in a private temp directory and the
//! configured command template is invoked with `{lp}`, `{sol}`, `{timeout}`,
//! and `{threads}` substituted. The solver (or an adapter script around it)
//! must write a solution file in a whitespace dialect: `name value` pairs,
//! `#` comments, and the reserved names `status`, `objective`, and `gap`.
//! A missing `status` line is read as optimal.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::belief::JointPlan;
use crate::error::Error;
use crate::graph::Vertex;
use crate::instance::Instance;
use crate::milp::{MilpModel, VarName};
use crate::Result;

use super::enumeration::DEFAULT_ENUMERATION_CAP;
use super::lp::write_lp;

/// Environment variable overriding where solver scratch directories live.
pub const TMPDIR_ENV: &str = "MESPP_TMPDIR";

/// Extra wall time granted past the requested timeout before the subprocess
/// is killed, so a self-limiting solver can still write its incumbent.
const KILL_SLACK: Duration = Duration::from_secs(2);

/// How a model (or instance) gets solved.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverBackend {
    /// Spawn a command per solve; the template must mention `{lp}` and
    /// `{sol}` and may mention `{timeout}` and `{threads}`.
    External { command: String },
    /// Exhaustive joint-path enumeration inside this process.
    Enumeration,
}

/// Solve-time knobs shared by both backends.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub backend: SolverBackend,
    pub timeout: Duration,
    pub threads: u32,
    /// Relative MIP gap below which a result is accepted as optimal.
    pub gap_tolerance: f64,
    /// Refusal threshold for enumeration, in projected joint paths.
    pub enumeration_cap: u64,
}

impl SolverSpec {
    pub fn external(command: impl Into<String>) -> Self {
        Self {
            backend: SolverBackend::External {
                command: command.into(),
            },
            timeout: Duration::from_secs(1800),
            threads: 8,
            gap_tolerance: 1e-9,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }

    pub fn enumeration() -> Self {
        Self {
            backend: SolverBackend::Enumeration,
            timeout: Duration::from_secs(1800),
            threads: 1,
            gap_tolerance: 0.0,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

/// Terminal state of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Stopped at the time limit with a feasible incumbent.
    FeasibleTimeout,
    Infeasible,
    Error,
}

/// Everything reported back from one solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    /// Incumbent assignment keyed by LP variable name; empty when none.
    pub assignment: BTreeMap<String, f64>,
    /// Relative optimality gap; 0 when proven optimal.
    pub mip_gap: Option<f64>,
    pub wall_time: Duration,
    /// Identity of whatever produced the result.
    pub solver: String,
    /// Captured stderr or parse context when something went wrong.
    pub diagnostics: String,
}

impl SolveResult {
    pub fn has_incumbent(&self) -> bool {
        !self.assignment.is_empty()
    }
}

/// Writes the model to an LP file, runs the external command, and parses the
/// solution file. Solver-side failures (nonzero exit, unparseable output,
/// timeout without incumbent) come back as `SolveStatus::Error` results
/// with diagnostics rather than hard errors.
pub fn solve_external(model: &MilpModel, spec: &SolverSpec) -> Result<SolveResult> {
    let SolverBackend::External { command } = &spec.backend else {
        return Err(Error::SolverInvocation {
            message: "solve_external needs an external backend".into(),
        });
    };
    if !command.contains("{lp}") || !command.contains("{sol}") {
        return Err(Error::SolverInvocation {
            message: format!("command template `{command}` must mention {{lp}} and {{sol}}"),
        });
    }

    let scratch_root = std::env::var_os(TMPDIR_ENV)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    let scratch = tempfile::Builder::new()
        .prefix("mespp-solve-")
        .tempdir_in(scratch_root)?;
    let lp_path = scratch.path().join("model.lp");
    let sol_path = scratch.path().join("model.sol");
    std::fs::write(&lp_path, write_lp(model))?;

    let timeout_secs = spec.timeout.as_secs().max(1);
    let args: Vec<String> = command
        .split_whitespace()
        .map(|token| {
            token
                .replace("{lp}", &lp_path.to_string_lossy())
                .replace("{sol}", &sol_path.to_string_lossy())
                .replace("{timeout}", &timeout_secs.to_string())
                .replace("{threads}", &spec.threads.to_string())
        })
        .collect();

    let started = Instant::now();
    let stdout_path = scratch.path().join("solver.out");
    let stderr_path = scratch.path().join("solver.err");
    let mut child = std::process::Command::new(&args[0])
        .args(&args[1..])
        .stdin(std::process::Stdio::null())
        .stdout(std::fs::File::create(&stdout_path)?)
        .stderr(std::fs::File::create(&stderr_path)?)
        .spawn()
        .map_err(|err| Error::SolverInvocation {
            message: format!("failed to spawn `{}`: {err}", args[0]),
        })?;

    let deadline = spec.timeout + KILL_SLACK;
    let mut timed_out = false;
    let exit = loop {
        match child.try_wait()? {
            Some(status) => break Some(status),
            None if started.elapsed() > deadline => {
                timed_out = true;
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            None => std::thread::sleep(Duration::from_millis(5)),
        }
    };
    let wall_time = started.elapsed();

    let read_tail = |path: &Path| -> String {
        let mut text = String::new();
        if let Ok(mut file) = std::fs::File::open(path) {
            let _ = file.read_to_string(&mut text);
        }
        let tail: String = text.chars().rev().take(2000).collect();
        tail.chars().rev().collect()
    };

    let error_result = |message: String| SolveResult {
        status: SolveStatus::Error,
        objective: None,
        assignment: BTreeMap::new(),
        mip_gap: None,
        wall_time,
        solver: args[0].clone(),
        diagnostics: message,
    };

    let sol_text = std::fs::read_to_string(&sol_path).ok();
    if timed_out && sol_text.is_none() {
        return Ok(error_result(format!(
            "killed after {:.1}s with no solution file",
            wall_time.as_secs_f64()
        )));
    }
    if let Some(status) = exit {
        if !status.success() && sol_text.is_none() {
            return Ok(error_result(format!(
                "solver exited with {status}; stderr: {}",
                read_tail(&stderr_path)
            )));
        }
    }
    let Some(sol_text) = sol_text else {
        return Ok(error_result(format!(
            "solver wrote no solution file; stderr: {}",
            read_tail(&stderr_path)
        )));
    };

    match parse_solution_file(&sol_text, model, spec, timed_out) {
        Ok(mut result) => {
            result.wall_time = wall_time;
            result.solver = args[0].clone();
            Ok(result)
        }
        Err(err) => Ok(error_result(format!("unparseable solution file: {err}"))),
    }
}

/// Parses the solution dialect against a model (used to reconstruct a
/// missing objective value from the incumbent).
pub fn parse_solution_file(
    text: &str,
    model: &MilpModel,
    spec: &SolverSpec,
    timed_out: bool,
) -> Result<SolveResult> {
    let mut status_word: Option<String> = None;
    let mut objective: Option<f64> = None;
    let mut gap: Option<f64> = None;
    let mut assignment = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected `name value`, got `{line}`"),
            });
        }
        let parse_value = || -> Result<f64> {
            fields[1].parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("invalid number `{}`", fields[1]),
            })
        };
        match fields[0] {
            "status" => status_word = Some(fields[1].to_ascii_lowercase()),
            "objective" => objective = Some(parse_value()?),
            "gap" => gap = Some(parse_value()?),
            name => {
                assignment.insert(name.to_string(), parse_value()?);
            }
        }
    }

    let status = match status_word.as_deref() {
        Some("optimal") => SolveStatus::Optimal,
        Some("feasible") | Some("suboptimal") | Some("timeout") => SolveStatus::FeasibleTimeout,
        Some("infeasible") => SolveStatus::Infeasible,
        Some(other) => {
            return Err(Error::SolverFailed {
                message: format!("unknown solver status `{other}`"),
            });
        }
        None if !assignment.is_empty() || objective.is_some() => SolveStatus::Optimal,
        None => {
            return Err(Error::SolverFailed {
                message: "solution file carries neither status nor values".into(),
            });
        }
    };
    // A stop at the wall clock with an incumbent is a timeout result even if
    // the file claims better.
    let status = if timed_out && status == SolveStatus::Optimal && gap.unwrap_or(0.0) > 0.0 {
        SolveStatus::FeasibleTimeout
    } else {
        status
    };

    let objective = objective.or_else(|| {
        if assignment.is_empty() || status == SolveStatus::Infeasible {
            None
        } else {
            Some(
                model
                    .objective()
                    .terms()
                    .iter()
                    .map(|&(var, coef)| {
                        coef * assignment
                            .get(&model.var(var).name.to_string())
                            .copied()
                            .unwrap_or(0.0)
                    })
                    .sum(),
            )
        }
    });
    let mip_gap = match status {
        SolveStatus::Optimal => Some(gap.unwrap_or(0.0)),
        SolveStatus::FeasibleTimeout => gap,
        _ => None,
    };
    if status == SolveStatus::Optimal {
        if let Some(g) = mip_gap {
            if g > spec.gap_tolerance {
                return Err(Error::SolverFailed {
                    message: format!("optimal status with gap {g} above tolerance"),
                });
            }
        }
    }

    Ok(SolveResult {
        status,
        objective,
        assignment,
        mip_gap,
        wall_time: Duration::default(),
        solver: String::new(),
        diagnostics: String::new(),
    })
}

/// Reads the searcher paths out of an incumbent assignment: for each
/// searcher and step, the unique position variable at value >= 0.5.
pub fn decode_paths(
    instance: &Instance,
    model: &MilpModel,
    result: &SolveResult,
) -> Result<JointPlan> {
    if !result.has_incumbent() {
        return Err(Error::Decode {
            message: "result carries no incumbent assignment".into(),
        });
    }
    let m = instance.searcher_count();
    let h = instance.horizon;
    let mut chosen: Vec<Vec<Option<Vertex>>> = vec![vec![None; h + 1]; m];
    for var in model.vars() {
        let VarName::Position { s, t, v } = var.name else {
            continue;
        };
        let value = result
            .assignment
            .get(&var.name.to_string())
            .copied()
            .unwrap_or(0.0);
        if value >= 0.5 {
            if let Some(previous) = chosen[s - 1][t] {
                return Err(Error::Decode {
                    message: format!(
                        "searcher {s} sits on both {previous} and {v} at step {t}"
                    ),
                });
            }
            chosen[s - 1][t] = Some(v);
        }
    }
    let mut paths = Vec::with_capacity(m);
    for (idx, steps) in chosen.into_iter().enumerate() {
        let mut path = Vec::with_capacity(h + 1);
        for (t, slot) in steps.into_iter().enumerate() {
            path.push(slot.ok_or_else(|| Error::Decode {
                message: format!("searcher {} has no position at step {t}", idx + 1),
            })?);
        }
        paths.push(path);
    }
    let plan = JointPlan::new(paths)?;
    plan.validate(&instance.graph, &instance.starts)
        .map_err(|err| Error::Decode {
            message: format!("incumbent decodes to an illegal plan: {err}"),
        })?;
    Ok(plan)
}

//! One function per subcommand, each producing a finished report.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use flatness_core::backtest::backward_flatness_test;
use flatness_core::flatout::{
    derive_forward_flat_output, load_candidate, verify_flat_output, FlatOutputCandidate,
    Parameterization,
};
use flatness_core::geomtest::forward_flatness_test;
use flatness_core::jacrank::{check_rank_conditions, RankMode};
use flatness_core::sysmodel::{build_associated, load_system_path, SystemModel};
use flatness_core::trajcheck::{check_correspondence, check_parameterization_roundtrip};
use flatness_core::Error;

use crate::report::{
    BackwardReport, FlatnessReport, OutputReport, OutputStatus, ParameterizationReport,
    SequenceReport, Status, TrajectoryReport, Validation,
};

/// Horizon and seed count of the point checks run alongside `test` and
/// `verify`.
const POINT_HORIZON: usize = 10;
const POINT_SEEDS: usize = 20;

const INCONCLUSIVE: &str = "test inconclusive: extended map not invertible by elimination";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Forward,
    Backward,
    Both,
}

struct Clock {
    enabled: bool,
    times: BTreeMap<String, f64>,
}

impl Clock {
    fn new(enabled: bool) -> Self {
        Clock {
            enabled,
            times: BTreeMap::new(),
        }
    }

    fn time<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        if self.enabled {
            self.times
                .insert(label.into(), start.elapsed().as_secs_f64() * 1e3);
        }
        out
    }

    fn store(self, r: &mut FlatnessReport) {
        if self.enabled {
            r.timings_ms = Some(self.times);
        }
    }
}

fn is_inconclusive(e: &Error) -> bool {
    matches!(e, Error::InversionNotFound { .. } | Error::NoInverse)
}

/// Status for a system file that could not be loaded: malformed input and
/// I/O problems are errors (1), everything else makes the system invalid (2).
fn load_failure_status(e: &Error) -> Status {
    match e {
        Error::Json { .. } | Error::Io(_) | Error::Internal(_) => Status::Error,
        _ => Status::Refuted,
    }
}

fn load(path: &Path, r: &mut FlatnessReport) -> Option<SystemModel> {
    match load_system_path(path) {
        Ok(s) => {
            r.validation = Validation {
                valid: true,
                message: None,
            };
            r.system = Some(s.to_file());
            Some(s)
        }
        Err(e) => {
            r.validation = Validation {
                valid: false,
                message: Some(e.to_string()),
            };
            r.finish(load_failure_status(&e));
            None
        }
    }
}

pub fn validate(path: &Path, seed: u64) -> FlatnessReport {
    let mut r = FlatnessReport::new("validate", &path.display().to_string(), seed);
    if load(path, &mut r).is_some() {
        r.finish(Status::Holds);
    }
    r
}

fn rank_mode(p: &Parameterization) -> RankMode {
    if p.r1.iter().all(|&r| r == 0) {
        RankMode::Forward
    } else if p.r2.iter().all(|&r| r == 0) {
        RankMode::Backward
    } else {
        RankMode::General
    }
}

/// Verification, ranks and point checks of one output.
fn certify_output(
    r: &mut FlatnessReport,
    role: &str,
    s: &SystemModel,
    cand: &FlatOutputCandidate,
    window: (u32, u32),
    seed: u64,
) -> Result<OutputReport, Error> {
    let mut out = OutputReport::new(role, &s.name, Some(cand), OutputStatus::Verified);
    match verify_flat_output(s, cand, window.0, window.1) {
        Ok(p) => {
            out.ranks = Some(check_rank_conditions(&p, rank_mode(&p)));
            out.parameterization = Some(ParameterizationReport::from(&p));
            let summary =
                check_parameterization_roundtrip(s, &p, cand, POINT_HORIZON, POINT_SEEDS, seed)?;
            if !summary.passed {
                return Err(Error::Internal(format!(
                    "point check of a certified parameterization failed: {:?}",
                    summary.first_failure
                )));
            }
            r.trajectory_checks.push(TrajectoryReport {
                kind: "roundtrip".into(),
                system: s.name.clone(),
                summary,
            });
        }
        Err(Error::VerificationFailed {
            unresolved,
            residual,
        }) => {
            out.status = OutputStatus::Failed;
            out.message = Some(format!("unresolved: {}", unresolved.join(", ")));
            out.residual = residual;
        }
        Err(e) if is_inconclusive(&e) => {
            out.status = OutputStatus::Inconclusive;
            out.message = Some(e.to_string());
        }
        Err(e) => return Err(e),
    }
    Ok(out)
}

/// `Some(true/false)` for a decided property, `None` for inconclusive.
type Verdict = Option<bool>;

fn run_forward(
    r: &mut FlatnessReport,
    s: &SystemModel,
    derive: bool,
    max_degree: u32,
    clock: &mut Clock,
) -> Result<Verdict, Error> {
    let rec = match clock.time("forward", || forward_flatness_test(s)) {
        Ok(rec) => rec,
        Err(e) if is_inconclusive(&e) => {
            r.messages.push(format!("forward {INCONCLUSIVE}"));
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    r.forward = Some(SequenceReport::from_record(&s.name, &rec));
    if derive && rec.forward_flat {
        let n = s.n() as u32;
        match clock.time("forward derivation", || {
            derive_forward_flat_output(s, &rec, max_degree)
        }) {
            Ok(y) => {
                let out = clock.time("forward certification", || {
                    certify_output(r, "forward", s, &y, (0, n), r.seed)
                })?;
                r.outputs.push(out);
            }
            Err(e) => {
                let mut out = OutputReport::new("forward", &s.name, None, OutputStatus::NotDerived);
                out.message = Some(e.to_string());
                r.outputs.push(out);
            }
        }
    }
    Ok(Some(rec.forward_flat))
}

fn run_backward(
    r: &mut FlatnessReport,
    s: &SystemModel,
    derive: bool,
    max_degree: u32,
    clock: &mut Clock,
) -> Result<Verdict, Error> {
    let v = match clock.time("backward", || backward_flatness_test(s, derive, max_degree)) {
        Ok(v) => v,
        Err(e) if is_inconclusive(&e) => {
            r.messages.push(format!("backward {INCONCLUSIVE}"));
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    r.backward = Some(BackwardReport {
        associated: v.associated.to_file(),
        sequence: SequenceReport::from_record(&v.associated.name, &v.forward_record),
        flat: v.backward_flat,
    });
    if derive {
        let summary = clock.time("correspondence", || {
            check_correspondence(s, POINT_HORIZON, POINT_SEEDS, r.seed)
        })?;
        r.trajectory_checks.push(TrajectoryReport {
            kind: "correspondence".into(),
            system: s.name.clone(),
            summary,
        });
    }
    if derive && v.backward_flat {
        let n = s.n() as u32;
        match (&v.associated_output, &v.derived_output) {
            (Some(yhat), Some(y)) => {
                let assoc_out = clock.time("associated certification", || {
                    certify_output(r, "associated-forward", &v.associated, yhat, (0, n), r.seed)
                })?;
                r.outputs.push(assoc_out);
                let out = clock.time("backward certification", || {
                    certify_output(r, "backward", s, y, (n, 0), r.seed)
                })?;
                r.outputs.push(out);
            }
            _ => {
                let mut out =
                    OutputReport::new("backward", &s.name, None, OutputStatus::NotDerived);
                out.message = v.derivation_error.clone();
                r.outputs.push(out);
            }
        }
    }
    Ok(Some(v.backward_flat))
}

fn combine(verdicts: &[Verdict]) -> Status {
    if verdicts.contains(&Some(true)) {
        Status::Holds
    } else if verdicts.contains(&None) {
        Status::Inconclusive
    } else {
        Status::Refuted
    }
}

pub struct TestOptions {
    pub mode: Mode,
    pub derive: bool,
    pub max_degree: u32,
    pub seed: u64,
    pub timings: bool,
}

pub fn test(path: &Path, opts: &TestOptions) -> FlatnessReport {
    let mut r = FlatnessReport::new("test", &path.display().to_string(), opts.seed);
    let Some(s) = load(path, &mut r) else {
        return r;
    };
    let mut clock = Clock::new(opts.timings);
    let mut verdicts = Vec::new();
    let result = (|| {
        if opts.mode != Mode::Backward {
            verdicts.push(run_forward(
                &mut r,
                &s,
                opts.derive,
                opts.max_degree,
                &mut clock,
            )?);
        }
        if opts.mode != Mode::Forward {
            verdicts.push(run_backward(
                &mut r,
                &s,
                opts.derive,
                opts.max_degree,
                &mut clock,
            )?);
        }
        Ok::<_, Error>(())
    })();
    clock.store(&mut r);
    match result {
        Ok(()) => r.finish(combine(&verdicts)),
        Err(e) => {
            r.messages.push(format!("error: {e}"));
            r.finish(Status::Error);
        }
    }
    r
}

pub struct VerifyOptions {
    pub max_back: Option<u32>,
    pub max_fwd: Option<u32>,
    pub seed: u64,
    pub timings: bool,
}

pub fn verify(path: &Path, candidate: &Path, opts: &VerifyOptions) -> FlatnessReport {
    let mut r = FlatnessReport::new("verify", &path.display().to_string(), opts.seed);
    let Some(s) = load(path, &mut r) else {
        return r;
    };
    let cand = std::fs::read_to_string(candidate)
        .map_err(|e| Error::Io(format!("{}: {e}", candidate.display())))
        .and_then(|text| load_candidate(&text, &s));
    let cand = match cand {
        Ok(c) => c,
        Err(e) => {
            let status = if is_inconclusive(&e) {
                Status::Inconclusive
            } else {
                Status::Error
            };
            r.messages
                .push(format!("candidate {}: {e}", candidate.display()));
            r.finish(status);
            return r;
        }
    };
    let n = s.n() as u32;
    let window = (opts.max_back.unwrap_or(n), opts.max_fwd.unwrap_or(n));
    let mut clock = Clock::new(opts.timings);
    let out = clock.time("verify", || {
        certify_output(&mut r, "candidate", &s, &cand, window, opts.seed)
    });
    clock.store(&mut r);
    match out {
        Ok(out) => {
            let status = match out.status {
                OutputStatus::Verified => Status::Holds,
                OutputStatus::Inconclusive => Status::Inconclusive,
                _ => Status::Refuted,
            };
            r.outputs.push(out);
            r.finish(status);
        }
        Err(e) => {
            r.messages.push(format!("error: {e}"));
            r.finish(Status::Error);
        }
    }
    r
}

pub struct SimcheckOptions {
    pub horizon: usize,
    pub seeds: usize,
    pub seed: u64,
}

pub fn simcheck(path: &Path, opts: &SimcheckOptions) -> FlatnessReport {
    let mut r = FlatnessReport::new("simcheck", &path.display().to_string(), opts.seed);
    let Some(s) = load(path, &mut r) else {
        return r;
    };
    match check_correspondence(&s, opts.horizon, opts.seeds, opts.seed) {
        Ok(summary) => {
            let status = if summary.passed {
                Status::Holds
            } else {
                Status::Refuted
            };
            r.trajectory_checks.push(TrajectoryReport {
                kind: "correspondence".into(),
                system: s.name.clone(),
                summary,
            });
            r.finish(status);
        }
        Err(e) => {
            let status = if is_inconclusive(&e) {
                Status::Inconclusive
            } else {
                Status::Error
            };
            r.messages.push(e.to_string());
            r.finish(status);
        }
    }
    r
}

/// The associated system as a system file, or the status and message of
/// the failure.
pub fn associated(path: &Path) -> Result<String, (Status, String)> {
    let s = load_system_path(path).map_err(|e| (load_failure_status(&e), e.to_string()))?;
    let a = build_associated(&s).map_err(|e| {
        let status = if is_inconclusive(&e) {
            Status::Inconclusive
        } else {
            Status::Error
        };
        (status, e.to_string())
    })?;
    serde_json::to_string_pretty(&a.to_file()).map_err(|e| (Status::Error, e.to_string()))
}

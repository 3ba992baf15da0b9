//! The JSON report and its human-readable rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use flatness_core::flatout::{FlatOutputCandidate, Parameterization};
use flatness_core::geomtest::{Distribution, SequenceRecord};
use flatness_core::jacrank::RankReport;
use flatness_core::sysmodel::SystemFile;
use flatness_core::trajcheck::CheckSummary;
use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Holds,
    Refuted,
    Inconclusive,
    Error,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Holds => "holds",
            Status::Refuted => "refuted",
            Status::Inconclusive => "inconclusive",
            Status::Error => "error",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Holds => 0,
            Status::Refuted => 2,
            Status::Inconclusive => 3,
            Status::Error => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub file: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemFile>,
    pub validation: Validation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forward: Option<SequenceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backward: Option<BackwardReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<OutputReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectory_checks: Vec<TrajectoryReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, f64>>,
    pub status: Status,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub messages: Vec<String>,
}

impl FlatnessReport {
    pub fn new(command: &str, file: &str, seed: u64) -> Self {
        FlatnessReport {
            schema: SCHEMA,
            tool: "flatness".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            file: file.into(),
            seed,
            system: None,
            validation: Validation {
                valid: false,
                message: None,
            },
            forward: None,
            backward: None,
            outputs: Vec::new(),
            trajectory_checks: Vec::new(),
            timings_ms: None,
            status: Status::Error,
            exit_code: 1,
            messages: Vec::new(),
        }
    }

    pub fn finish(&mut self, status: Status) {
        self.status = status;
        self.exit_code = status.exit_code();
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub system: String,
    pub chart: Vec<String>,
    pub dims: Vec<usize>,
    pub stop_index: usize,
    pub flat: bool,
    /// Basis fields as coefficient lists over `chart`.
    pub e: Vec<Vec<Vec<String>>>,
    pub d: Vec<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn bases(ds: &[Distribution]) -> Vec<Vec<Vec<String>>> {
    ds.iter().map(|d| d.to_strings()).collect()
}

impl SequenceReport {
    pub fn from_record(system: &str, rec: &SequenceRecord) -> Self {
        SequenceReport {
            system: system.into(),
            chart: rec.chart.iter().map(|v| v.to_string()).collect(),
            dims: rec.dims.clone(),
            stop_index: rec.stop_index,
            flat: rec.forward_flat,
            e: bases(&rec.e),
            d: bases(&rec.d),
            warnings: rec.warnings.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackwardReport {
    pub associated: SystemFile,
    pub sequence: SequenceReport,
    pub flat: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputStatus {
    Verified,
    Failed,
    Inconclusive,
    NotDerived,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputReport {
    /// `forward`, `backward` or `candidate`.
    pub role: String,
    pub system: String,
    pub components: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub q1: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub q2: Vec<u32>,
    pub status: OutputStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parameterization: Option<ParameterizationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranks: Option<RankReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residual: Vec<String>,
}

impl OutputReport {
    pub fn new(
        role: &str,
        system: &str,
        cand: Option<&FlatOutputCandidate>,
        status: OutputStatus,
    ) -> Self {
        OutputReport {
            role: role.into(),
            system: system.into(),
            components: cand.map(|c| c.to_strings()).unwrap_or_default(),
            q1: cand.map(|c| c.q1.clone()).unwrap_or_default(),
            q2: cand.map(|c| c.q2.clone()).unwrap_or_default(),
            status,
            message: None,
            parameterization: None,
            ranks: None,
            residual: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterizationReport {
    pub outputs: Vec<String>,
    pub f_x: Vec<String>,
    pub f_u: Vec<String>,
    pub f_g: Vec<String>,
    pub r1: Vec<u32>,
    pub r2: Vec<u32>,
}

fn strings<T: ToString>(items: &[T]) -> Vec<String> {
    items.iter().map(|x| x.to_string()).collect()
}

impl From<&Parameterization> for ParameterizationReport {
    fn from(p: &Parameterization) -> Self {
        ParameterizationReport {
            outputs: strings(&p.outputs),
            f_x: strings(&p.f_x),
            f_u: strings(&p.f_u),
            f_g: strings(&p.f_g),
            r1: p.r1.clone(),
            r2: p.r2.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    /// `correspondence` or `roundtrip`.
    pub kind: String,
    pub system: String,
    #[serde(flatten)]
    pub summary: CheckSummary,
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "YES"
    } else {
        "NO"
    }
}

fn render_sequence(out: &mut String, label: &str, seq: &SequenceReport) {
    let _ = writeln!(out, "{label}: {}", yes_no(seq.flat));
    let _ = writeln!(out, "  system: {}", seq.system);
    let dims: Vec<String> = seq.dims.iter().map(|d| d.to_string()).collect();
    let _ = writeln!(
        out,
        "  dims E_k: ({}), stop at k = {}",
        dims.join(", "),
        seq.stop_index
    );
    for (k, basis) in seq.e.iter().enumerate() {
        let _ = writeln!(out, "  E_{k} = {}", render_span(&seq.chart, basis));
    }
    for (k, basis) in seq.d.iter().enumerate() {
        let _ = writeln!(out, "  D_{k} = {}", render_span(&seq.chart, basis));
    }
    for w in &seq.warnings {
        let _ = writeln!(out, "  warning: {w}");
    }
}

fn render_span(chart: &[String], basis: &[Vec<String>]) -> String {
    let fields: Vec<String> = basis
        .iter()
        .map(|coeffs| {
            let mut field = String::new();
            for (v, c) in chart.iter().zip(coeffs).filter(|(_, c)| c.as_str() != "0") {
                let single = !c[1..].contains([' ', '/']);
                let (neg, body) = match c.strip_prefix('-') {
                    Some(rest) if single => (true, rest),
                    _ => (false, c.as_str()),
                };
                let term = match body {
                    "1" => format!("d_{v}"),
                    _ if single => format!("{body}*d_{v}"),
                    _ => format!("({body})*d_{v}"),
                };
                match (field.is_empty(), neg) {
                    (true, false) => field.push_str(&term),
                    (true, true) => field.push_str(&format!("-{term}")),
                    (false, false) => field.push_str(&format!(" + {term}")),
                    (false, true) => field.push_str(&format!(" - {term}")),
                }
            }
            field
        })
        .collect();
    format!("span{{{}}}", fields.join(", "))
}

fn render_output(out: &mut String, o: &OutputReport) {
    let status = match o.status {
        OutputStatus::Verified => "verified",
        OutputStatus::Failed => "verification failed",
        OutputStatus::Inconclusive => "inconclusive",
        OutputStatus::NotDerived => "not derived",
    };
    if o.components.is_empty() {
        let _ = writeln!(out, "{} output ({}): {status}", o.role, o.system);
    } else {
        let _ = writeln!(
            out,
            "{} output ({}): y = ({}) [{status}]",
            o.role,
            o.system,
            o.components.join(", ")
        );
    }
    if let Some(m) = &o.message {
        let _ = writeln!(out, "  {m}");
    }
    if let Some(p) = &o.parameterization {
        let _ = writeln!(out, "  R1 = {:?}, R2 = {:?}", p.r1, p.r2);
        for (i, e) in p.f_x.iter().enumerate() {
            let _ = writeln!(out, "  F_x[{}] = {e}", i + 1);
        }
        for (i, e) in p.f_u.iter().enumerate() {
            let _ = writeln!(out, "  F_u[{}] = {e}", i + 1);
        }
    }
    if let Some(r) = &o.ranks {
        let [a, b, c, d] = r.ranks();
        let _ = writeln!(
            out,
            "  ranks: d_y[-R1] F_x = {a}, d_y[-R1] F_g = {b}, d_y[R2-1] F_x = {c}, d_y[R2] F_u = {d} (m = {})",
            r.m
        );
        let _ = writeln!(
            out,
            "  forward conditions: {}, backward conditions: {}, top ranks equal: {}",
            yes_no(r.forward_conditions || r.degenerate),
            yes_no(r.backward_conditions),
            yes_no(r.top_ranks_equal)
        );
    }
    for r in &o.residual {
        let _ = writeln!(out, "  residual: {r} = 0");
    }
}

/// Text rendering of a report.
pub fn render_human(r: &FlatnessReport) -> String {
    let mut out = String::new();
    let name = r.system.as_ref().map(|s| s.name.as_str()).unwrap_or("?");
    let _ = writeln!(out, "{} [{}]", r.file, name);
    match (&r.validation.valid, &r.validation.message) {
        (true, _) => {
            if let Some(s) = &r.system {
                let _ = writeln!(out, "valid: n = {}, m = {}", s.states.len(), s.inputs.len());
            }
        }
        (false, Some(m)) => {
            let _ = writeln!(out, "invalid: {m}");
        }
        (false, None) => {}
    }
    if let Some(f) = &r.forward {
        render_sequence(&mut out, "forward-flat", f);
    }
    if let Some(b) = &r.backward {
        render_sequence(&mut out, "backward-flat", &b.sequence);
        let _ = writeln!(out, "  associated system:");
        for (x, f) in b.associated.states.iter().zip(&b.associated.f) {
            let _ = writeln!(out, "    {x}+ = {f}");
        }
        if let (Some(g), Some(inv)) = (&b.associated.g, &b.associated.inverse) {
            for (eta, g) in inv.zeta.iter().zip(g) {
                let _ = writeln!(out, "    {eta} = {g}");
            }
        }
    }
    for o in &r.outputs {
        render_output(&mut out, o);
    }
    for t in &r.trajectory_checks {
        let s = &t.summary;
        let _ = write!(
            out,
            "{} check ({}): {} (N = {}, {} seeds from {})",
            t.kind,
            t.system,
            if s.passed { "pass" } else { "FAIL" },
            s.horizon,
            s.seeds,
            s.base_seed
        );
        if let Some(f) = &s.first_failure {
            let _ = write!(out, ", first failure: seed {} step {}", f.seed, f.step);
        }
        out.push('\n');
    }
    for m in &r.messages {
        let _ = writeln!(out, "{m}");
    }
    if let Some(t) = &r.timings_ms {
        for (k, v) in t {
            let _ = writeln!(out, "time {k}: {v:.1} ms");
        }
    }
    let _ = writeln!(out, "status: {} (exit {})", r.status.name(), r.exit_code);
    out
}

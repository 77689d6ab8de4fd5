//! One function per subcommand. Each returns a [`RunReport`] carrying its
//! exit code; failures are recorded in the report rather than propagated.

use std::fmt::Write as _;
use std::time::Instant;

use afree_core::blowup::{normalized_limit, verify_theorem, BlowupError, BlowupReport, BumpTestFunction, VerdictTable, VerifyConfig};
use afree_core::cone::{intersection_cone_exact, intersection_cone_sampled, max_principal_angle, ConeResult};
use afree_core::measure::{check_afree, AfreeReport, DiscreteMeasure};
use afree_core::operator::{parse_operator, serialize_operator, OperatorSystem};
use afree_core::singularity::{check_uniform_singularity, SingularityCertificate};
use afree_core::symbol::{principal_part, solve_weights, summarize, EquationSummary, HomogeneityWeights, PrincipalPart};
use serde::Serialize;

use crate::config::{Method, RunConfig, MAX_SIZE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_WEIGHTS: i32 = 3;
pub const EXIT_NOT_AFREE: i32 = 4;
pub const EXIT_CERTIFICATE: i32 = 5;
pub const EXIT_CLAUSE: i32 = 6;

/// Largest principal angle accepted as agreement between cone methods.
pub const ANGLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportError {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorSection {
    pub source: String,
    pub dim: usize,
    pub components: usize,
    pub equations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeSection {
    pub point: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<ConeResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampled: Option<ConeResult>,
    /// Largest principal angle between the two methods, when both ran and
    /// the dimensions agree.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_principal_angle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agree: Option<bool>,
}

/// An ε-table written with `--csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub name: String,
    pub content: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub version: &'static str,
    pub command: String,
    pub config: RunConfig,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ReportError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub principal_part: Option<Vec<EquationSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cones: Option<Vec<ConeSection>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub afree: Option<AfreeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificates: Option<Vec<SingularityCertificate>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blowups: Option<Vec<BlowupReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdicts: Option<VerdictTable>,
    pub timing_ms: f64,
    #[serde(skip)]
    pub tables: Vec<CsvTable>,
}

impl RunReport {
    fn new(command: &str, config: &RunConfig) -> Self {
        RunReport {
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config: config.clone(),
            exit_code: EXIT_OK,
            error: None,
            operator: None,
            principal_part: None,
            cones: None,
            afree: None,
            certificates: None,
            blowups: None,
            verdicts: None,
            timing_ms: 0.0,
            tables: Vec::new(),
        }
    }

    fn fail(&mut self, code: i32, kind: &str, message: impl Into<String>) {
        self.exit_code = code;
        self.error = Some(ReportError { kind: kind.to_string(), message: message.into() });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Short human-readable digest.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        if let Some(op) = &self.operator {
            let _ = writeln!(s, "operator: d = {}, m = {}, n = {}", op.dim, op.components, op.equations);
        }
        for e in self.principal_part.iter().flatten() {
            let set = |v: &[afree_core::multi_index::MultiIndex]| v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ");
            let _ = writeln!(s, "equation {}: I = {{{}}}, I' = {{{}}}", e.equation, set(&e.index_set), set(&e.dominating_set));
            if let (Some(w), Some(p)) = (&e.weights, &e.manifold) {
                let _ = writeln!(s, "  beta = ({})", w.join(", "));
                let _ = writeln!(s, "  P = {p}");
            }
        }
        for c in self.cones.iter().flatten() {
            let _ = write!(s, "cone at {:?}:", c.point);
            for r in c.exact.iter().chain(&c.sampled) {
                let _ = write!(s, " {:?} dimension {}", r.method, r.dimension);
            }
            if let Some(a) = c.max_principal_angle {
                let _ = write!(s, ", max angle {a:e}");
            }
            s.push('\n');
        }
        if let Some(a) = &self.afree {
            let _ = writeln!(s, "A-free: residual {:e} ({})", a.max_residual, if a.pass { "pass" } else { "fail" });
        }
        for c in self.certificates.iter().flatten() {
            let _ = writeln!(s, "certificate at {:?}: {}", c.point, if c.verdict { "pass" } else { "fail" });
        }
        for b in self.blowups.iter().flatten() {
            let _ = writeln!(s, "blow-up at {:?}, equation {}: limit {}, gap {:e}", b.z, b.equation, b.extrapolated_limit, b.gap);
        }
        if let Some(v) = &self.verdicts {
            let _ = writeln!(s, "theorem: {}", if v.pass { "pass" } else { "fail" });
        }
        if let Some(e) = &self.error {
            let _ = writeln!(s, "error ({}): {}", e.kind, e.message);
        }
        s
    }
}

struct Loaded {
    op: OperatorSystem,
    pp: PrincipalPart,
}

fn load_operator(config: &RunConfig, report: &mut RunReport) -> Option<Loaded> {
    let path = config.resolve(&config.operator);
    let source = match std::fs::read_to_string(&path) {
        Ok(s) => s,
        Err(e) => {
            report.fail(EXIT_INPUT, "io", format!("cannot read operator {}: {e}", path.display()));
            return None;
        }
    };
    let op = match parse_operator(&source) {
        Ok(op) => op,
        Err(e) => {
            report.fail(EXIT_INPUT, "parse", format!("{}: {e}", path.display()));
            return None;
        }
    };
    if op.dim() > MAX_SIZE || op.components() > MAX_SIZE || op.equation_count() > MAX_SIZE {
        report.fail(EXIT_INPUT, "size", format!("d, m and n are capped at {MAX_SIZE}"));
        return None;
    }
    report.operator = Some(OperatorSection {
        source: serialize_operator(&op),
        dim: op.dim(),
        components: op.components(),
        equations: op.equation_count(),
    });
    let pp = principal_part(&op);
    Some(Loaded { op, pp })
}

fn load_weights(loaded: &Loaded, report: &mut RunReport) -> Option<HomogeneityWeights> {
    match solve_weights(&loaded.pp) {
        Ok(w) => {
            report.principal_part = Some(summarize(&loaded.op, &loaded.pp, Some(&w)));
            Some(w)
        }
        Err(e) => {
            report.principal_part = Some(summarize(&loaded.op, &loaded.pp, None));
            report.fail(EXIT_WEIGHTS, "weights", e.to_string());
            None
        }
    }
}

fn load_measure(config: &RunConfig, op: &OperatorSystem, report: &mut RunReport) -> Option<DiscreteMeasure> {
    let Some(rel) = &config.measure else {
        report.fail(EXIT_INPUT, "config", "this command needs a measure file");
        return None;
    };
    let path = config.resolve(rel);
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            report.fail(EXIT_INPUT, "io", format!("cannot read measure {}: {e}", path.display()));
            return None;
        }
    };
    match DiscreteMeasure::from_json(&text) {
        Ok(mu) if mu.d == op.dim() && mu.m == op.components() => Some(mu),
        Ok(mu) => {
            report.fail(
                EXIT_INPUT,
                "measure",
                format!("measure is ({}, {}), operator acts on ({}, {})", mu.d, mu.m, op.dim(), op.components()),
            );
            None
        }
        Err(e) => {
            report.fail(EXIT_INPUT, "measure", format!("{}: {e}", path.display()));
            None
        }
    }
}

fn check_points(config: &RunConfig, d: usize, report: &mut RunReport) -> bool {
    if let Some(p) = config.points.iter().find(|p| p.len() != d) {
        report.fail(EXIT_INPUT, "config", format!("point {p:?} does not have {d} coordinates"));
        return false;
    }
    true
}

fn finish(mut report: RunReport, start: Instant) -> RunReport {
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    report
}

pub fn cmd_parse(config: &RunConfig) -> RunReport {
    let start = Instant::now();
    let mut report = RunReport::new("parse", config);
    if let Some(l) = load_operator(config, &mut report) {
        report.principal_part = Some(summarize(&l.op, &l.pp, None));
    }
    finish(report, start)
}

pub fn cmd_symbol(config: &RunConfig) -> RunReport {
    let start = Instant::now();
    let mut report = RunReport::new("symbol", config);
    if let Some(l) = load_operator(config, &mut report) {
        load_weights(&l, &mut report);
    }
    finish(report, start)
}

pub fn cmd_wavecone(config: &RunConfig, method: Method) -> RunReport {
    let start = Instant::now();
    let mut report = RunReport::new("wavecone", config);
    let Some(l) = load_operator(config, &mut report) else { return finish(report, start) };
    let Some(w) = load_weights(&l, &mut report) else { return finish(report, start) };
    if !check_points(config, l.op.dim(), &mut report) {
        return finish(report, start);
    }
    let frames = w.frames();
    let points = if config.points.is_empty() { vec![vec![0.0; l.op.dim()]] } else { config.points.clone() };
    let mut sections = Vec::new();
    for x in points {
        let exact = match method {
            Method::Exact | Method::Both => Some(intersection_cone_exact(&l.pp, &x)),
            Method::Sampled => None,
        };
        let sampled = match method {
            Method::Sampled | Method::Both => {
                Some(intersection_cone_sampled(&l.pp, &frames, &x, config.cone_samples, config.seed, config.tolerances.cone))
            }
            Method::Exact => None,
        };
        let (exact, sampled) = match (exact.transpose(), sampled.transpose()) {
            (Ok(e), Ok(s)) => (e, s),
            (Err(e), _) | (_, Err(e)) => {
                report.fail(EXIT_INPUT, "cone", e.to_string());
                return finish(report, start);
            }
        };
        let (angle, agree) = match (&exact, &sampled) {
            (Some(e), Some(s)) => {
                let angle = max_principal_angle(e, s);
                (angle, Some(angle.is_some_and(|a| a < ANGLE_TOL)))
            }
            _ => (None, None),
        };
        sections.push(ConeSection { point: x, exact, sampled, max_principal_angle: angle, agree });
    }
    if sections.iter().any(|s| s.agree == Some(false)) {
        report.fail(EXIT_CLAUSE, "cone", "exact and sampled cones disagree");
    }
    report.cones = Some(sections);
    finish(report, start)
}

pub fn cmd_check_afree(config: &RunConfig) -> RunReport {
    let start = Instant::now();
    let mut report = RunReport::new("check-afree", config);
    let Some(l) = load_operator(config, &mut report) else { return finish(report, start) };
    let Some(mu) = load_measure(config, &l.op, &mut report) else { return finish(report, start) };
    match check_afree(&l.op, &mu, &config.afree_options()) {
        Ok(a) => {
            if !a.pass {
                report.fail(EXIT_NOT_AFREE, "not_afree", format!("residual {:e} above {:e}", a.max_residual, a.tolerance));
            }
            report.afree = Some(a);
        }
        Err(e) => report.fail(EXIT_INPUT, "measure", e.to_string()),
    }
    finish(report, start)
}

fn certificates(config: &RunConfig, mu: &DiscreteMeasure, report: &mut RunReport) -> Option<Vec<SingularityCertificate>> {
    let eps = config.epsilon_values();
    let mut out = Vec::new();
    for (i, z) in config.points.iter().enumerate() {
        match check_uniform_singularity(mu, z, &config.scales(), config.certificate.strategy, &eps, config.tolerances.certificate) {
            Ok(c) => {
                report.tables.push(CsvTable { name: format!("singularity_p{}", i + 1), content: c.to_csv() });
                out.push(c);
            }
            Err(e) => {
                report.fail(EXIT_INPUT, "certificate", e.to_string());
                return None;
            }
        }
    }
    if let Some(c) = out.iter().find(|c| !c.verdict) {
        report.fail(EXIT_CERTIFICATE, "certificate_failed", format!("uniform singularity fails at {:?}", c.point));
    }
    report.certificates = Some(out.clone());
    Some(out)
}

pub fn cmd_check_singularity(config: &RunConfig) -> RunReport {
    let start = Instant::now();
    let mut report = RunReport::new("check-singularity", config);
    let Some(l) = load_operator(config, &mut report) else { return finish(report, start) };
    let Some(mu) = load_measure(config, &l.op, &mut report) else { return finish(report, start) };
    if check_points(config, l.op.dim(), &mut report) {
        certificates(config, &mu, &mut report);
    }
    finish(report, start)
}

fn default_bump(d: usize) -> (Vec<f64>, f64) {
    // Off-centre so that first-order pairings against the mollifier do not
    // vanish by symmetry.
    ([0.3, -0.2, 0.1, -0.15, 0.25, -0.05, 0.2, -0.1][..d].to_vec(), 1.0)
}

pub fn cmd_blowup(config: &RunConfig) -> RunReport {
    let start = Instant::now();
    let mut report = RunReport::new("blowup", config);
    let Some(l) = load_operator(config, &mut report) else { return finish(report, start) };
    let Some(w) = load_weights(&l, &mut report) else { return finish(report, start) };
    let Some(mu) = load_measure(config, &l.op, &mut report) else { return finish(report, start) };
    if !check_points(config, l.op.dim(), &mut report) {
        return finish(report, start);
    }
    let Some(certs) = certificates(config, &mu, &mut report) else { return finish(report, start) };
    if report.exit_code != EXIT_OK {
        return finish(report, start);
    }
    let (center, scale) = match &config.test_function {
        Some(b) if b.center.len() == l.op.dim() && b.scale > 0.0 => (b.center.clone(), b.scale),
        Some(_) => {
            report.fail(EXIT_INPUT, "config", "test_function needs one centre coordinate per dimension and scale > 0");
            return finish(report, start);
        }
        None => default_bump(l.op.dim()),
    };
    let phi = BumpTestFunction::new(center, scale, l.op.max_order() as usize);
    let frames = w.frames();
    let mut blowups = Vec::new();
    for (i, (z, cert)) in config.points.iter().zip(&certs).enumerate() {
        for j in 0..l.op.equation_count() {
            match normalized_limit(&l.op, &l.pp, &frames, &mu, z, j, &phi, cert) {
                Ok(b) => {
                    report.tables.push(CsvTable { name: format!("blowup_p{}_eq{}", i + 1, j + 1), content: b.to_csv() });
                    blowups.push(b);
                }
                Err(e) => {
                    let code = if matches!(e, BlowupError::CertificateFailed { .. }) { EXIT_CERTIFICATE } else { EXIT_INPUT };
                    report.fail(code, "blowup", e.to_string());
                    break;
                }
            }
        }
    }
    report.blowups = Some(blowups);
    finish(report, start)
}

pub fn verify_config(config: &RunConfig) -> VerifyConfig {
    VerifyConfig {
        afree: config.afree_options(),
        scales: config.scales(),
        strategy: config.certificate.strategy,
        epsilons: config.epsilon_values(),
        certificate_tol: config.tolerances.certificate,
        cone_samples: config.cone_samples,
        pointwise_tol: config.tolerances.residual,
        seed: config.seed,
        grid_resolution: config.grid_resolution,
        padding: config.padding,
        blowup_tol: config.tolerances.blowup,
        psi_family: None,
    }
}

pub fn cmd_verify(config: &RunConfig) -> RunReport {
    let start = Instant::now();
    let mut report = RunReport::new("verify", config);
    let Some(l) = load_operator(config, &mut report) else { return finish(report, start) };
    if load_weights(&l, &mut report).is_none() {
        return finish(report, start);
    }
    let Some(mu) = load_measure(config, &l.op, &mut report) else { return finish(report, start) };
    if !check_points(config, l.op.dim(), &mut report) {
        return finish(report, start);
    }
    match verify_theorem(&l.op, &mu, &config.points, &verify_config(config)) {
        Ok(table) => {
            for (i, (c, p)) in table.certificates.iter().zip(&table.points).enumerate() {
                report.tables.push(CsvTable { name: format!("singularity_p{}", i + 1), content: c.to_csv() });
                for (k, b) in p.blowups.iter().enumerate() {
                    report.tables.push(CsvTable {
                        name: format!("blowup_p{}_eq{}_psi{}", i + 1, b.report.equation, k + 1),
                        content: b.report.to_csv(),
                    });
                }
            }
            report.afree = Some(table.afree.clone());
            report.certificates = Some(table.certificates.clone());
            if !table.pass {
                report.fail(EXIT_CLAUSE, "clause_failed", "at least one theorem clause failed");
            }
            report.verdicts = Some(table);
        }
        Err(BlowupError::NotAFree { report: a }) => {
            report.fail(EXIT_NOT_AFREE, "not_afree", format!("residual {:e} above {:e}", a.max_residual, a.tolerance));
            report.afree = Some(*a);
        }
        Err(BlowupError::CertificateFailed { point, reason, certificate }) => {
            report.fail(EXIT_CERTIFICATE, "certificate_failed", format!("at {point:?}: {reason}"));
            report.certificates = certificate.map(|c| vec![*c]);
        }
        Err(BlowupError::Weights(e)) => report.fail(EXIT_WEIGHTS, "weights", e.to_string()),
        Err(e) => report.fail(EXIT_INPUT, "input", e.to_string()),
    }
    finish(report, start)
}

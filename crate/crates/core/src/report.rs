//! Run configuration, command dispatch and deterministic report output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::ambient::{basic_field, complex_outer, cp_curvature, fd_sectional_curvature, sphere_curvature, AmbientModel, HopfLift};
use crate::biharmonic::{
    characterize, tension_laplacian_residual, riemannian_bitension, sphere_contraction_residual, weitzenbock_residual, BiharmonicVerdict,
    BitensionSample, Tolerances,
};
use crate::catalog::{build_immersion, closed_form_loci, positive_roots, sample_points, scan_family, CaseTag, Family, FamilySpec, Grid, LociReport, RowVerdict, ScanTable};
use crate::error::{GeomError, Result};
use crate::geometry::{axis, mul_i, project_tangent, FdConfig, TangentVec};
use crate::immersion::{Immersion, StepLadder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Verify,
    Scan,
    Predicates,
    Identities,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub family: Family,
    pub n: usize,
    pub param: Option<f64>,
    pub grid: Option<Grid>,
    pub points: usize,
    pub seed: u64,
    pub h1: f64,
    pub h2: f64,
    /// Steps for the second-order (Laplacian) differences.
    pub lap_h1: f64,
    pub lap_h2: f64,
    pub tol_bitension: f64,
    pub tol_condition: f64,
    pub tol_defect: f64,
    /// Use the full Riemannian bitension in `verify`.
    pub riemannian: bool,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command, family: Family, n: usize) -> Self {
        let ladder = StepLadder::default();
        let tol = Tolerances::default();
        Self {
            command,
            family,
            n,
            param: None,
            grid: None,
            points: 8,
            seed: 1,
            h1: ladder.first.h1(),
            h2: ladder.first.h2(),
            lap_h1: ladder.second.h1(),
            lap_h2: ladder.second.h2(),
            tol_bitension: tol.bitension,
            tol_condition: tol.condition,
            tol_defect: tol.defect,
            riemannian: false,
            format: Format::Json,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("tol_bitension", self.tol_bitension), ("tol_condition", self.tol_condition), ("tol_defect", self.tol_defect)] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(GeomError::Config(format!("{name} must be positive, got {t}")));
            }
        }
        if self.points < 1 {
            return Err(GeomError::Config("points must be at least 1".into()));
        }
        self.ladder()?;
        match self.command {
            Command::Verify | Command::Identities => {
                let param = self.param.ok_or_else(|| GeomError::Config("--param is required".into()))?;
                FamilySpec::new(self.family, self.n, param)?;
            }
            Command::Scan => {
                let grid = self.grid.ok_or_else(|| GeomError::Config("--min, --max and --steps are required".into()))?;
                Grid::new(grid.min, grid.max, grid.steps)?;
                FamilySpec::new(self.family, self.n, grid.min)?;
                FamilySpec::new(self.family, self.n, grid.max)?;
            }
            Command::Predicates => {
                if self.n < 1 {
                    return Err(GeomError::Config("n must be at least 1".into()));
                }
            }
        }
        Ok(())
    }

    pub fn ladder(&self) -> Result<StepLadder> {
        let second = FdConfig::new(self.lap_h1, self.lap_h2, true)?;
        if self.lap_h1 <= self.lap_h2 {
            return Err(GeomError::Config("lap_h1 must exceed lap_h2".into()));
        }
        Ok(StepLadder::new(FdConfig::new(self.h1, self.h2, true)?, second))
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances { bitension: self.tol_bitension, condition: self.tol_condition, defect: self.tol_defect, ..Tolerances::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    /// Where the expected value comes from: `closed_form`, `identity` or
    /// `definition`.
    pub expected_provenance: String,
    pub tol: f64,
    pub pass: bool,
}

impl CheckReport {
    fn new(name: impl Into<String>, measured: f64, expected: f64, provenance: &str, tol: f64) -> Self {
        let pass = (measured - expected).abs() <= tol;
        Self { name: name.into(), measured, expected, expected_provenance: provenance.into(), tol, pass }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    /// Measured quantities that are reported but not checked.
    pub statistics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Meta {
    pub version: String,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub config: RunConfig,
    pub checks: Vec<CheckReport>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdicts: Option<Vec<BiharmonicVerdict>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loci: Option<LociReport>,
    pub meta: Meta,
}

impl Report {
    fn new(config: &RunConfig, checks: Vec<CheckReport>, statistics: BTreeMap<String, f64>) -> Self {
        let passed = checks.iter().filter(|c| c.pass).count();
        Self {
            config: config.clone(),
            summary: Summary { total: checks.len(), passed, failed: checks.len() - passed, statistics },
            checks,
            verdicts: None,
            scan: None,
            loci: None,
            meta: Meta { version: env!("CARGO_PKG_VERSION").into(), seed: config.seed },
        }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn check(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn statistic(&self, name: &str) -> Option<f64> {
        self.summary.statistics.get(name).copied()
    }

    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self).map_err(|e| GeomError::Consistency(format!("report serialization: {e}")))?;
        let mut out = String::new();
        write_json(&value, 0, &mut out);
        out.push('\n');
        Ok(out)
    }

    /// Scan rows for `scan`, the check list otherwise.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| GeomError::Consistency(format!("csv output: {e}"));
        if let Some(scan) = &self.scan {
            w.write_record(["param", "tau_b", "tau_b2_normalized", "b_norm_H", "admissibility_defect", "parallelism_defect", "verdict"])
                .map_err(err)?;
            for r in &scan.rows {
                let nums = [r.param, r.tau_b, r.tau_b2_normalized, r.b_norm_h, r.admissibility_defect, r.parallelism_defect];
                let mut rec: Vec<String> = nums.iter().map(|x| format_float(*x)).collect();
                rec.push(r.verdict.name().into());
                w.write_record(&rec).map_err(err)?;
            }
        } else {
            w.write_record(["name", "measured", "expected", "expected_provenance", "tol", "pass"]).map_err(err)?;
            for c in &self.checks {
                w.write_record([
                    c.name.clone(),
                    format_float(c.measured),
                    format_float(c.expected),
                    c.expected_provenance.clone(),
                    format_float(c.tol),
                    c.pass.to_string(),
                ])
                .map_err(err)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| GeomError::Consistency(format!("csv output: {e}")))?;
        String::from_utf8(bytes).map_err(|e| GeomError::Consistency(e.to_string()))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }

    /// Writes to the configured path, or stdout when none is set.
    pub fn emit(&self) -> Result<()> {
        let text = self.render(self.config.format)?;
        let io = |e: std::io::Error| GeomError::Config(format!("cannot write report: {e}"));
        match &self.config.out {
            Some(path) => std::fs::write(path, text).map_err(io),
            None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(io),
        }
    }
}

/// 17 significant digits; non-finite values become `null`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

fn write_json(v: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize, out: &mut String| out.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) if !n.is_f64() => out.push_str(&u.to_string()),
            (_, Some(i), _) if !n.is_f64() => out.push_str(&i.to_string()),
            (_, _, Some(f)) => out.push_str(&format_float(f)),
            _ => out.push_str("null"),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(depth + 1, out);
                write_json(item, depth + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(depth, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(depth + 1, out);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_json(item, depth + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(depth, out);
            out.push('}');
        }
    }
}

pub fn run(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    match config.command {
        Command::Verify if config.riemannian => verify_riemannian(config),
        Command::Verify => verify(config),
        Command::Scan => scan(config),
        Command::Predicates => Ok(predicates(config)),
        Command::Identities => identities(config),
    }
}

fn immersion_for(config: &RunConfig) -> Result<(Immersion, f64)> {
    let param = config.param.ok_or_else(|| GeomError::Config("--param is required".into()))?;
    Ok((build_immersion(&FamilySpec::new(config.family, config.n, param)?)?, param))
}

fn worst<T>(items: &[T], f: impl Fn(&T) -> f64) -> f64 {
    items.iter().map(f).fold(0.0, f64::max)
}

fn mean<T>(items: &[T], f: impl Fn(&T) -> f64) -> f64 {
    items.iter().map(f).sum::<f64>() / items.len() as f64
}

/// The value farthest from `target`.
fn farthest<T>(items: &[T], target: f64, f: impl Fn(&T) -> f64) -> f64 {
    items.iter().map(f).fold(target, |acc, x| if (x - target).abs() > (acc - target).abs() { x } else { acc })
}

fn verify(config: &RunConfig) -> Result<Report> {
    let (im, _) = immersion_for(config)?;
    let ladder = config.ladder()?;
    let tol = config.tolerances();
    let points = sample_points(im.source(), config.points, config.seed)?;
    let verdicts: Vec<BiharmonicVerdict> = points.par_iter().map(|p| characterize(&im, p, &ladder, &tol)).collect::<Result<_>>()?;

    let mut checks = vec![
        CheckReport::new("admissibility_defect", worst(&verdicts, |v| v.hypotheses.admissibility_defect), 0.0, "definition", tol.defect),
        CheckReport::new("parallelism_defect", worst(&verdicts, |v| v.hypotheses.parallelism_defect), 0.0, "definition", tol.defect),
        CheckReport::new("tau_b2_normalized", worst(&verdicts, |v| v.tau_b2_norm), 0.0, "definition", tol.bitension),
    ];
    let rhs = verdicts[0].condition_rhs;
    checks.push(CheckReport::new("b_norm_sq_horizontal", farthest(&verdicts, rhs, |v| v.condition_lhs), rhs, "closed_form", tol.condition));
    let disagreements = verdicts.iter().filter(|v| v.bitension_pass != v.condition_pass).count();
    checks.push(CheckReport::new("bitension_condition_agreement", disagreements as f64, 0.0, "identity", 0.0));
    let tags: Vec<Option<CaseTag>> = verdicts.iter().map(|v| v.case_tag).collect();
    let tag = tags[0].filter(|t| tags.iter().all(|u| *u == Some(*t)));
    let case_name = match tag {
        Some(CaseTag::Sphere) => "sphere",
        Some(CaseTag::CpTangentCase) => "cp_tangent_case",
        Some(CaseTag::CpNormalCase) => "cp_normal_case",
        None => "none",
    };
    checks.push(CheckReport::new(format!("case_tag.{case_name}"), f64::from(u8::from(tag.is_some())), 1.0, "definition", 0.0));

    let mut stats = BTreeMap::new();
    stats.insert("tau_b_mean".into(), mean(&verdicts, |v| v.tau_b_norm));
    stats.insert("tau_b_min".into(), verdicts.iter().map(|v| v.tau_b_norm).fold(f64::INFINITY, f64::min));
    stats.insert("tau_b2_normalized_mean".into(), mean(&verdicts, |v| v.tau_b2_norm));
    stats.insert("tau_b2_signed_mean".into(), mean(&verdicts, |v| v.tau_b2_signed));
    stats.insert("b_norm_sq_horizontal_mean".into(), mean(&verdicts, |v| v.condition_lhs));
    stats.insert("decomposition_residual_max".into(), worst(&verdicts, |v| v.decomposition_residual));
    let mut report = Report::new(config, checks, stats);
    report.verdicts = Some(verdicts);
    Ok(report)
}

fn verify_riemannian(config: &RunConfig) -> Result<Report> {
    let (im, _) = immersion_for(config)?;
    let ladder = config.ladder()?;
    let points = sample_points(im.source(), config.points, config.seed)?;
    let samples: Vec<BitensionSample> = points.par_iter().map(|p| riemannian_bitension(&im, p, &ladder)).collect::<Result<_>>()?;
    let checks = vec![CheckReport::new("tau2_normalized", worst(&samples, |s| s.normalized()), 0.0, "definition", config.tol_bitension)];
    let mut stats = BTreeMap::new();
    stats.insert("tau_mean".into(), mean(&samples, |s| s.tension_norm()));
    stats.insert("tau_max".into(), worst(&samples, |s| s.tension_norm()));
    stats.insert("tau2_normalized_mean".into(), mean(&samples, |s| s.normalized()));
    stats.insert("b_norm_sq_mean".into(), mean(&samples, |s| s.b_norm_sq));
    Ok(Report::new(config, checks, stats))
}

/// Loci that the numerical models realize: the sphere family and the normal
/// case of the projective family.
fn realized_loci(loci: &LociReport) -> Vec<f64> {
    loci.pseudo_biharmonic_proper.iter().filter(|l| l.case != CaseTag::CpTangentCase).map(|l| l.param).collect()
}

fn scan(config: &RunConfig) -> Result<Report> {
    let grid = config.grid.ok_or_else(|| GeomError::Config("grid required".into()))?;
    let table = scan_family(config.family, config.n, grid, config.points, config.seed, &config.ladder()?, &config.tolerances())?;
    let spacing = (grid.max - grid.min) / (grid.steps - 1) as f64;
    let expected: Vec<f64> =
        realized_loci(&closed_form_loci(config.family, config.n)).into_iter().filter(|x| *x > grid.min && *x < grid.max).collect();

    let mut checks = vec![CheckReport::new(
        "zero_crossing_count",
        table.zero_crossings.len() as f64,
        expected.len() as f64,
        "closed_form",
        0.0,
    )];
    for (i, z) in table.zero_crossings.iter().enumerate() {
        let nearest = expected.iter().copied().min_by(|a, b| (a - z).abs().total_cmp(&(b - z).abs())).unwrap_or(f64::NAN);
        checks.push(CheckReport::new(format!("zero_crossing.{i}"), *z, nearest, "closed_form", spacing));
    }
    let tol = config.tolerances();
    let disagreements = table
        .rows
        .iter()
        .filter(|r| {
            let bit = r.tau_b2_normalized < tol.bitension;
            let cond = (r.b_norm_h - 2.0 * config.n as f64).abs() < tol.condition;
            r.verdict != RowVerdict::HypothesesNotMet && r.verdict != RowVerdict::PseudoHarmonic && bit != cond
        })
        .count();
    if config.family == Family::SmallSphere {
        checks.push(CheckReport::new("predicate_disagreements", disagreements as f64, 0.0, "identity", 0.0));
    }
    let unmet = table.rows.iter().filter(|r| r.verdict == RowVerdict::HypothesesNotMet).count();
    let mut stats = BTreeMap::new();
    stats.insert("rows".into(), table.rows.len() as f64);
    stats.insert("hypotheses_not_met_rows".into(), unmet as f64);
    stats.insert("grid_spacing".into(), spacing);
    let mut report = Report::new(config, checks, stats);
    report.scan = Some(table);
    Ok(report)
}

fn predicates(config: &RunConfig) -> Report {
    const EXACT: f64 = 1e-12;
    let n = config.n as f64;
    let loci = closed_form_loci(config.family, config.n);
    let mut checks = Vec::new();
    match config.family {
        Family::SmallSphere => {
            // |B|_{H×H}|² = 2n (1 - r²)/r² must equal 2n at the biharmonic radius.
            for l in &loci.pseudo_biharmonic_proper {
                let r2 = l.param * l.param;
                checks.push(CheckReport::new("pseudo_biharmonic_condition", 2.0 * n * (1.0 - r2) / r2, 2.0 * n, "closed_form", EXACT * n));
            }
            for l in &loci.pseudo_harmonic {
                checks.push(CheckReport::new("pseudo_harmonic_mean_curvature", (1.0 - l.param * l.param).sqrt(), 0.0, "closed_form", EXACT));
            }
        }
        Family::TakagiA1 => {
            let quad = |b: f64, c: f64, x: f64| (x * x - b * x + c) / (1.0 + x * x);
            for l in &loci.pseudo_harmonic {
                checks.push(CheckReport::new("pseudo_harmonic_tan_sq", l.param.tan().powi(2), 2.0 * n, "closed_form", EXACT * (1.0 + 2.0 * n)));
            }
            for l in &loci.pseudo_biharmonic_proper {
                let x = l.tan_sq.unwrap_or(f64::NAN);
                let (name, residual) = match l.case {
                    CaseTag::CpNormalCase => ("pseudo_biharmonic_normal_case_tan_sq", x - 1.0),
                    _ => ("pseudo_biharmonic_tangent_case_residual", quad(2.0 * n + 5.0, 2.0 * n, x)),
                };
                checks.push(CheckReport::new(name, residual, 0.0, "closed_form", EXACT));
            }
            for l in &loci.riemannian_minimal {
                checks.push(CheckReport::new("riemannian_minimal_tan_sq", l.param.tan().powi(2), 2.0 * n + 1.0, "closed_form", EXACT * (2.0 + 2.0 * n)));
            }
            for l in &loci.riemannian_biharmonic_proper {
                let x = l.tan_sq.unwrap_or(f64::NAN);
                checks.push(CheckReport::new("riemannian_biharmonic_residual", quad(2.0 * (n + 3.0), 2.0 * n + 1.0, x), 0.0, "closed_form", EXACT));
            }
            let tangent_roots = positive_roots(2.0 * n + 5.0, 2.0 * n).len();
            checks.push(CheckReport::new("tangent_case_root_count", tangent_roots as f64, 2.0, "closed_form", 0.0));
        }
    }
    let mut report = Report::new(config, checks, BTreeMap::new());
    report.loci = Some(loci);
    report
}

/// Exact and finite-difference holomorphic sectional curvature at the image
/// of `p`, plus the exact totally real value.
fn projective_curvatures(image: &crate::geometry::EmbeddedPoint, c: f64) -> Result<(f64, f64, f64)> {
    let lift = HopfLift::at(image)?;
    let x = &lift.horiz_basis[0];
    let jx = TangentVec::from_parts(lift.rep.clone(), mul_i(x.comps()));
    let y = &lift.horiz_basis[2];
    let sectional = |a: &TangentVec, b: &TangentVec| -> Result<f64> {
        let r = cp_curvature(a, b, b, c)?;
        let area = a.comps().norm_squared() * b.comps().norm_squared() - a.comps().dot(b.comps()).powi(2);
        Ok(r.comps().dot(a.comps()) / area)
    };
    let exact_hol = sectional(x, &jx)?;
    let exact_real = sectional(x, y)?;
    let rep = lift.rep.coords();
    let fx = basic_field("X", complex_outer(x.comps(), rep));
    let fjx = basic_field("JX", complex_outer(jx.comps(), rep));
    let cfg = FdConfig::new(1e-3, 1e-3, true)?;
    let fd_hol = fd_sectional_curvature(&lift.rep, &fx, &fjx, &cfg)?;
    Ok((exact_hol, exact_real, fd_hol))
}

/// Two orthonormal tangent vectors at a point of a sphere, from coordinate
/// axes.
fn orthonormal_pair(p: &crate::geometry::EmbeddedPoint) -> (TangentVec, TangentVec) {
    let axes: Vec<TangentVec> = (0..p.ambient_dim()).map(|k| project_tangent(p, &axis(p.ambient_dim(), k))).collect();
    let a = axes.iter().max_by(|u, v| u.norm().total_cmp(&v.norm())).expect("nonempty").clone();
    let a = a.scaled(1.0 / a.norm());
    let b = axes
        .iter()
        .map(|v| v.combine(1.0, &a, -v.comps().dot(a.comps())).expect("same base"))
        .max_by(|u, v| u.norm().total_cmp(&v.norm()))
        .expect("nonempty");
    let b = b.scaled(1.0 / b.norm());
    (a, b)
}

fn identities(config: &RunConfig) -> Result<Report> {
    let (im, _) = immersion_for(config)?;
    let ladder = config.ladder()?;
    let tol = config.tolerances();
    let src = *im.source();
    let points = sample_points(&src, config.points, config.seed)?;

    struct PointIdentities {
        gram: f64,
        asymmetry: f64,
        tangential: f64,
        admissibility: f64,
        parallelism: f64,
        weitzenbock: f64,
        tension_laplacian: f64,
        contraction: Option<f64>,
        curvatures: Option<(f64, f64, f64)>,
        sphere_sectional: Option<f64>,
    }

    let per_point: Vec<PointIdentities> = points
        .par_iter()
        .map(|p| -> Result<PointIdentities> {
            let frame = src.contact_frame_at(p)?;
            let table = im.form_table(p, &ladder.first)?;
            let x = src.frame_field(p)?.vector_field(0);
            let weitzenbock = weitzenbock_residual(&im, p, &x, &ladder)?.relative();
            let tension_laplacian = match tension_laplacian_residual(&im, p, &ladder, tol.defect) {
                Ok(r) => r.relative(),
                Err(GeomError::Precondition(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            let image = im.image(p)?;
            let (contraction, curvatures, sphere_sectional) = match *im.ambient() {
                AmbientModel::Sphere { .. } => {
                    let (a, b) = orthonormal_pair(&image);
                    let r = sphere_curvature(&a, &b, &b)?;
                    (Some(sphere_contraction_residual(&im, p, &ladder.first)?), None, Some(r.comps().dot(a.comps())))
                }
                AmbientModel::ComplexProjective { c, .. } => (None, Some(projective_curvatures(&image, c)?), None),
            };
            Ok(PointIdentities {
                gram: frame.gram_deviation(&src),
                asymmetry: table.max_asymmetry,
                tangential: table.max_tangential,
                admissibility: table.admissibility_defect(),
                parallelism: im.mean_curvature_parallelism_defect(p, &ladder)?,
                weitzenbock,
                tension_laplacian,
                contraction,
                curvatures,
                sphere_sectional,
            })
        })
        .collect::<Result<_>>()?;

    const IDENTITY_TOL: f64 = 1e-2;
    let mut checks = vec![
        CheckReport::new("frame_gram_deviation", worst(&per_point, |q| q.gram), 0.0, "definition", 1e-10),
        CheckReport::new("form_asymmetry", worst(&per_point, |q| q.asymmetry), 0.0, "identity", 1e-6),
        CheckReport::new("form_tangential_residual", worst(&per_point, |q| q.tangential), 0.0, "identity", 1e-6),
        CheckReport::new("admissibility_defect", worst(&per_point, |q| q.admissibility), 0.0, "definition", tol.defect),
        CheckReport::new("parallelism_defect", worst(&per_point, |q| q.parallelism), 0.0, "definition", tol.defect),
        CheckReport::new("weitzenbock_relative_residual", worst(&per_point, |q| q.weitzenbock), 0.0, "identity", IDENTITY_TOL),
        CheckReport::new("tension_laplacian_relative_residual", worst(&per_point, |q| q.tension_laplacian), 0.0, "identity", IDENTITY_TOL),
    ];
    match *im.ambient() {
        AmbientModel::Sphere { .. } => {
            checks.push(CheckReport::new("sphere_contraction_residual", worst(&per_point, |q| q.contraction.unwrap_or(f64::NAN)), 0.0, "identity", 1e-8));
            checks.push(CheckReport::new("sphere_sectional_curvature", farthest(&per_point, 1.0, |q| q.sphere_sectional.unwrap_or(f64::NAN)), 1.0, "closed_form", 1e-10));
        }
        AmbientModel::ComplexProjective { c, .. } => {
            let get = |f: fn(&(f64, f64, f64)) -> f64| move |q: &PointIdentities| q.curvatures.as_ref().map(f).unwrap_or(f64::NAN);
            checks.push(CheckReport::new("cp_holomorphic_curvature_exact", farthest(&per_point, c, get(|t| t.0)), c, "closed_form", 1e-10));
            checks.push(CheckReport::new("cp_totally_real_curvature_exact", farthest(&per_point, c / 4.0, get(|t| t.1)), c / 4.0, "closed_form", 1e-10));
            checks.push(CheckReport::new("cp_holomorphic_curvature_fd", farthest(&per_point, c, get(|t| t.2)), c, "closed_form", 2e-2 * c));
        }
    }
    let mut stats = BTreeMap::new();
    stats.insert("sample_points".into(), per_point.len() as f64);
    Ok(Report::new(config, checks, stats))
}

/// Process exit status for an error: usage problems 2, capability limits 3,
/// anything else 1.
pub fn exit_code(err: &GeomError) -> i32 {
    match err {
        GeomError::Config(_) | GeomError::Domain(_) => 2,
        GeomError::Capability(_) | GeomError::UnsupportedCodimension(_) => 3,
        _ => 1,
    }
}

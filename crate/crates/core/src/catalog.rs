//! Example families and their closed-form parameter loci.
//!
//! * `SmallSphere`: `S^{2n+1}(r) → S^{2n+2}(1)`, `x ↦ (x, √(1 - r²))`.
//! * `TakagiA1`: the geodesic sphere `π(S¹(cos u) × S^{2n+1}(sin u))` in
//!   `CP^{n+1}(4)`, parametrized by `x ↦ [cos u : x]` for `x ∈ S^{2n+1}(sin u)`.
//!   Its induced metric is the Berger metric with Reeb scale `cos u`, and the
//!   induced characteristic direction is `-Jξ`.

use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ambient::AmbientModel;
use crate::biharmonic::{characterize, pseudo_bitension, BiharmonicVerdict, BitensionStats, Tolerances};
use crate::cr::SourceSphere;
use crate::error::{GeomError, Result};
use crate::geometry::{random_sphere_point, EmbeddedPoint, Vector};
use crate::immersion::{Immersion, StepLadder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    SmallSphere,
    TakagiA1,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SmallSphere => "small_sphere",
            Self::TakagiA1 => "takagi_a1",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FamilySpec {
    pub family: Family,
    pub n: usize,
    pub param: f64,
}

/// Largest `n` for which immersions are built numerically.
pub const MAX_NUMERIC_N: usize = 1;

impl FamilySpec {
    pub fn new(family: Family, n: usize, param: f64) -> Result<Self> {
        if n < 1 {
            return Err(GeomError::Config("n must be at least 1".into()));
        }
        let ok = match family {
            Family::SmallSphere => param > 0.0 && param <= 1.0,
            Family::TakagiA1 => param > 0.0 && param < FRAC_PI_2,
        };
        if !ok {
            let range = match family {
                Family::SmallSphere => "(0, 1]",
                Family::TakagiA1 => "(0, π/2)",
            };
            return Err(GeomError::Config(format!("parameter {param} outside {range} for {}", family.name())));
        }
        Ok(Self { family, n, param })
    }
}

pub fn build_immersion(spec: &FamilySpec) -> Result<Immersion> {
    if spec.n > MAX_NUMERIC_N {
        return Err(GeomError::Capability(format!(
            "numerical pipelines support n <= {MAX_NUMERIC_N}; use closed-form predicates for n = {}",
            spec.n
        )));
    }
    let n = spec.n;
    match spec.family {
        Family::SmallSphere => {
            let r = spec.param;
            let height = (1.0 - r * r).max(0.0).sqrt();
            let source = SourceSphere::round(n, r)?;
            let ambient = AmbientModel::sphere(2 * n + 2)?;
            let len = 2 * n + 3;
            let im = Immersion::new(format!("small_sphere(n={n}, r={r})"), source, ambient, move |p| {
                let mut v = Vector::zeros(len);
                v.rows_mut(0, len - 1).copy_from(p.coords());
                v[len - 1] = height;
                EmbeddedPoint::sphere_from_ambient(&v, 1.0)
            })
            .with_normal(move |p| {
                let mut v = Vector::zeros(len);
                v.rows_mut(0, len - 1).copy_from(&(p.coords() * (-height / r)));
                v[len - 1] = r;
                Ok(v)
            });
            Ok(im)
        }
        Family::TakagiA1 => {
            let u = spec.param;
            let (sin_u, cos_u) = u.sin_cos();
            let source = SourceSphere::squashed(n, sin_u, cos_u)?;
            let ambient = AmbientModel::complex_projective(n + 1, 4.0)?;
            let len = 2 * n + 4;
            let cot_u = cos_u / sin_u;
            let im = Immersion::new(format!("takagi_a1(n={n}, u={u})"), source, ambient, move |p| {
                let mut v = Vector::zeros(len);
                v[0] = cos_u;
                v.rows_mut(2, len - 2).copy_from(p.coords());
                EmbeddedPoint::projective_from_ambient(&v)
            })
            .with_normal(move |p| {
                let mut v = Vector::zeros(len);
                v[0] = sin_u;
                v.rows_mut(2, len - 2).copy_from(&(p.coords() * -cot_u));
                Ok(v)
            });
            Ok(im)
        }
    }
}

/// Which alternative of the projective characterization a locus belongs to:
/// `Tangent` when `J dφ(T)` is tangent to the image, `Normal` when it is
/// normal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    Sphere,
    CpTangentCase,
    CpNormalCase,
}

/// A single parameter value. For Takagi loci `tan_sq` holds `tan²u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Locus {
    pub param: f64,
    pub tan_sq: Option<f64>,
    pub case: CaseTag,
}

impl Locus {
    fn radius(r: f64) -> Self {
        Self { param: r, tan_sq: None, case: CaseTag::Sphere }
    }

    fn angle(tan_sq: f64, case: CaseTag) -> Self {
        Self { param: tan_sq.sqrt().atan(), tan_sq: Some(tan_sq), case }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LociReport {
    pub family: Family,
    pub n: usize,
    pub pseudo_harmonic: Vec<Locus>,
    pub pseudo_biharmonic_proper: Vec<Locus>,
    pub riemannian_minimal: Vec<Locus>,
    pub riemannian_biharmonic_proper: Vec<Locus>,
}

/// Positive roots of `x² - b x + c = 0`, ascending. The smaller root is
/// computed as `c / larger` to avoid cancellation.
pub fn positive_roots(b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let big = 0.5 * (b.abs() + disc.sqrt()) * b.signum();
    if big == 0.0 {
        return Vec::new();
    }
    let mut roots = vec![c / big, big];
    roots.retain(|x| *x > 0.0);
    roots.sort_by(f64::total_cmp);
    roots
}

pub fn closed_form_loci(family: Family, n: usize) -> LociReport {
    let nf = n as f64;
    match family {
        Family::SmallSphere => LociReport {
            family,
            n,
            pseudo_harmonic: vec![Locus::radius(1.0)],
            pseudo_biharmonic_proper: vec![Locus::radius(std::f64::consts::FRAC_1_SQRT_2)],
            riemannian_minimal: vec![Locus::radius(1.0)],
            riemannian_biharmonic_proper: vec![Locus::radius(std::f64::consts::FRAC_1_SQRT_2)],
        },
        Family::TakagiA1 => {
            let mut pbh: Vec<Locus> = positive_roots(2.0 * nf + 5.0, 2.0 * nf)
                .into_iter()
                .map(|x| Locus::angle(x, CaseTag::CpTangentCase))
                .collect();
            pbh.push(Locus::angle(1.0, CaseTag::CpNormalCase));
            LociReport {
                family,
                n,
                pseudo_harmonic: vec![Locus::angle(2.0 * nf, CaseTag::CpTangentCase)],
                pseudo_biharmonic_proper: pbh,
                riemannian_minimal: vec![Locus { param: (2.0 * nf + 1.0).sqrt().atan(), tan_sq: Some(2.0 * nf + 1.0), case: CaseTag::CpNormalCase }],
                riemannian_biharmonic_proper: positive_roots(2.0 * (nf + 3.0), 2.0 * nf + 1.0)
                    .into_iter()
                    .map(|x| Locus::angle(x, CaseTag::CpNormalCase))
                    .collect(),
            }
        }
    }
}

/// Deterministic sample points on the source of an immersion: uniform unit
/// points from the seed, scaled to the source radius, so that every member
/// of a family is sampled at the same directions.
pub fn sample_points(source: &SourceSphere, count: usize, seed: u64) -> Result<Vec<EmbeddedPoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let unit = random_sphere_point(&mut rng, source.ambient_len(), 1.0)?;
            source.point(unit.coords() * source.radius())
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Grid {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if steps < 2 || min.partial_cmp(&max) != Some(std::cmp::Ordering::Less) {
            return Err(GeomError::Config(format!("grid needs min < max and at least 2 steps (got {min}, {max}, {steps})")));
        }
        Ok(Self { min, max, steps })
    }

    pub fn params(&self) -> Vec<f64> {
        let d = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| if i + 1 == self.steps { self.max } else { self.min + d * i as f64 }).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowVerdict {
    PseudoHarmonic,
    PseudoBiharmonic,
    NotPseudoBiharmonic,
    /// The bitension test and the curvature condition disagree.
    Inconsistent,
    HypothesesNotMet,
    NoCase,
}

impl RowVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PseudoHarmonic => "pseudo_harmonic",
            Self::PseudoBiharmonic => "pseudo_biharmonic",
            Self::NotPseudoBiharmonic => "not_pseudo_biharmonic",
            Self::Inconsistent => "inconsistent",
            Self::HypothesesNotMet => "hypotheses_not_met",
            Self::NoCase => "no_case",
        }
    }

    fn from_verdicts(verdicts: &[BiharmonicVerdict], tol: &Tolerances) -> Self {
        if verdicts.iter().any(|v| !v.hypotheses_met) {
            return Self::HypothesesNotMet;
        }
        if verdicts.iter().any(|v| v.case_tag.is_none()) {
            return Self::NoCase;
        }
        if verdicts.iter().all(|v| v.tau_b_norm <= tol.nonzero) {
            return Self::PseudoHarmonic;
        }
        let bit = verdicts.iter().all(|v| v.bitension_pass);
        let cond = verdicts.iter().all(|v| v.condition_pass);
        match (bit, cond) {
            (true, true) => Self::PseudoBiharmonic,
            (false, false) => Self::NotPseudoBiharmonic,
            _ => Self::Inconsistent,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub param: f64,
    pub tau_b: f64,
    pub tau_b2_normalized: f64,
    pub tau_b2_signed: f64,
    pub b_norm_h: f64,
    pub admissibility_defect: f64,
    pub parallelism_defect: f64,
    pub verdict: RowVerdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanTable {
    pub family: Family,
    pub n: usize,
    pub grid: Grid,
    pub rows: Vec<ScanRow>,
    /// Parameters where the signed normalized bitension changes sign,
    /// refined by bisection.
    pub zero_crossings: Vec<f64>,
}

/// Resolution of the bisection refinement of zero-crossings.
pub const CROSSING_RESOLUTION: f64 = 1e-4;

fn evaluate_row(family: Family, n: usize, param: f64, points: usize, seed: u64, ladder: &StepLadder, tol: &Tolerances) -> Result<ScanRow> {
    let im = build_immersion(&FamilySpec::new(family, n, param)?)?;
    let pts = sample_points(im.source(), points, seed)?;
    let verdicts: Vec<BiharmonicVerdict> = pts.iter().map(|p| characterize(&im, p, ladder, tol)).collect::<Result<_>>()?;
    let k = verdicts.len() as f64;
    let mean = |f: fn(&BiharmonicVerdict) -> f64| verdicts.iter().map(f).sum::<f64>() / k;
    let max = |f: fn(&BiharmonicVerdict) -> f64| verdicts.iter().map(f).fold(0.0, f64::max);
    Ok(ScanRow {
        param,
        tau_b: mean(|v| v.tau_b_norm),
        tau_b2_normalized: mean(|v| v.tau_b2_norm),
        tau_b2_signed: mean(|v| v.tau_b2_signed),
        b_norm_h: mean(|v| v.condition_lhs),
        admissibility_defect: max(|v| v.hypotheses.admissibility_defect),
        parallelism_defect: max(|v| v.hypotheses.parallelism_defect),
        verdict: RowVerdict::from_verdicts(&verdicts, tol),
    })
}

/// Mean signed normalized pseudo bitension of a family member.
pub fn signed_bitension(family: Family, n: usize, param: f64, points: usize, seed: u64, ladder: &StepLadder) -> Result<f64> {
    let im = build_immersion(&FamilySpec::new(family, n, param)?)?;
    let samples = sample_points(im.source(), points, seed)?
        .iter()
        .map(|p| pseudo_bitension(&im, p, ladder))
        .collect::<Result<Vec<_>>>()?;
    Ok(BitensionStats::from_samples(&samples).mean_signed)
}

#[allow(clippy::too_many_arguments)]
pub fn scan_family(
    family: Family,
    n: usize,
    grid: Grid,
    points: usize,
    seed: u64,
    ladder: &StepLadder,
    tol: &Tolerances,
) -> Result<ScanTable> {
    if points == 0 {
        return Err(GeomError::Config("scan needs at least one sample point".into()));
    }
    let rows: Vec<ScanRow> = grid
        .params()
        .par_iter()
        .map(|&param| evaluate_row(family, n, param, points, seed, ladder, tol))
        .collect::<Result<_>>()?;
    let brackets: Vec<(f64, f64, f64)> = rows
        .windows(2)
        .filter(|w| w[0].tau_b2_signed * w[1].tau_b2_signed < 0.0)
        .map(|w| (w[0].param, w[1].param, w[0].tau_b2_signed))
        .collect();
    let zero_crossings = brackets
        .par_iter()
        .map(|&(mut lo, mut hi, f_lo)| {
            while hi - lo > CROSSING_RESOLUTION {
                let mid = 0.5 * (lo + hi);
                let f_mid = signed_bitension(family, n, mid, points, seed, ladder)?;
                if f_mid == 0.0 {
                    return Ok(mid);
                }
                if (f_mid < 0.0) == (f_lo < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        })
        .collect::<Result<_>>()?;
    Ok(ScanTable { family, n, grid, rows, zero_crossings })
}

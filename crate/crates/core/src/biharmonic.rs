//! Second-order quantities: the sub-Laplacian on sections along an
//! immersion, the pseudo and Riemannian bitension fields, residuals of the
//! structural identities and the characterization verdict.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::ambient::AmbientModel;
use crate::catalog::CaseTag;
use crate::error::{GeomError, Result};
use crate::geometry::{mul_i, EmbeddedPoint, FdConfig, TangentVec, Vector, VectorFieldOracle};
use crate::immersion::{FormTable, Immersion, StepLadder};

pub type SectionFn = dyn Fn(&EmbeddedPoint) -> Result<Vector> + Send + Sync;

/// A section of the pullback bundle: for a source point `q`, an ambient
/// vector at `φ(q)`.
#[derive(Clone)]
pub struct SectionFieldOracle {
    label: String,
    eval: Arc<SectionFn>,
}

impl fmt::Debug for SectionFieldOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SectionFieldOracle").field("label", &self.label).finish()
    }
}

impl SectionFieldOracle {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&EmbeddedPoint) -> Result<Vector> + Send + Sync + 'static,
    {
        Self { label: label.into(), eval: Arc::new(f) }
    }

    pub fn eval(&self, q: &EmbeddedPoint) -> Result<Vector> {
        (self.eval)(q)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn pseudo_tension(im: &Immersion, cfg: FdConfig) -> Self {
        let im = im.clone();
        Self::new("tau_b", move |q| Ok(im.pseudo_tension(q, &cfg)?.normal))
    }

    pub fn tension(im: &Immersion, cfg: FdConfig) -> Self {
        let im = im.clone();
        Self::new("tau", move |q| Ok(im.full_tension(q, &cfg)?.normal))
    }
}

/// Second covariant derivative of `v` along `φ ∘ curve` at `t = 0`:
/// outer step `cfg.h1()`, inner step `cfg.h2()`.
fn second_covariant<C>(im: &Immersion, curve: C, v: &SectionFieldOracle, cfg: &FdConfig) -> Result<Vector>
where
    C: Fn(f64) -> Result<EmbeddedPoint>,
{
    let inner = |t: f64| -> Result<Vector> {
        im.covariant_along_curve(|s| curve(t + s), |s| v.eval(&curve(t + s)?), cfg.h2(), cfg.richardson())
    };
    im.covariant_along_curve(&curve, inner, cfg.h1(), cfg.richardson())
}

fn rough_laplacian(v: &SectionFieldOracle, im: &Immersion, p: &EmbeddedPoint, cfg: &FdConfig, with_reeb: bool) -> Result<Vector> {
    if cfg.h1() <= cfg.h2() {
        return Err(GeomError::Config(format!(
            "nested differences need h1 > h2 (h1 = {}, h2 = {})",
            cfg.h1(),
            cfg.h2()
        )));
    }
    let src = *im.source();
    let frame = src.contact_frame_at(p)?;
    let mut sum = Vector::zeros(im.ambient().ambient_len());
    // The Hessian trace is taken along geodesics tangent to the frame, where
    // the ∇_{X}X correction of the rough Laplacian vanishes.
    for x in &frame.horiz {
        let x = x.comps().clone();
        sum += second_covariant(im, |t| src.horizontal_geodesic(p, &x, t), v, cfg)?;
    }
    if with_reeb {
        sum += second_covariant(im, |t| src.reeb_geodesic(p, t), v, cfg)?;
    }
    Ok(-sum)
}

/// Sub-Laplacian `Δ_b V = -Σ (∇̄_{X_i}∇̄_{X_i} V - ∇̄_{∇_{X_i}X_i} V)` over a
/// horizontal orthonormal frame; a non-negative operator.
pub fn delta_b_section(v: &SectionFieldOracle, im: &Immersion, p: &EmbeddedPoint, cfg: &FdConfig) -> Result<Vector> {
    rough_laplacian(v, im, p, cfg, false)
}

/// Rough Laplacian over the full frame, including `T`.
pub fn rough_laplacian_section(v: &SectionFieldOracle, im: &Immersion, p: &EmbeddedPoint, cfg: &FdConfig) -> Result<Vector> {
    rough_laplacian(v, im, p, cfg, true)
}

/// Images `dφ(e)` of an adapted frame at `p`, horizontal vectors first.
pub fn frame_images(im: &Immersion, p: &EmbeddedPoint, cfg: &FdConfig) -> Result<Vec<TangentVec>> {
    let frame = im.source().contact_frame_at(p)?;
    frame.vectors().iter().map(|e| im.pushforward(p, e.comps(), cfg)).collect()
}

fn at(image: &EmbeddedPoint, v: &Vector) -> TangentVec {
    TangentVec::from_parts(image.clone(), v.clone())
}

/// `Σ_i R(V, dφ e_i) dφ e_i` over the given images.
fn curvature_contraction(ambient: &AmbientModel, image: &EmbeddedPoint, v: &Vector, images: &[TangentVec]) -> Result<Vector> {
    let v = at(image, v);
    let mut sum = Vector::zeros(image.ambient_dim());
    for e in images {
        sum += ambient.curvature(&v, e, e)?.comps();
    }
    Ok(sum)
}

/// One evaluation of a bitension field with the data needed to normalize it.
#[derive(Clone, Debug, Serialize)]
pub struct BitensionSample {
    #[serde(skip)]
    pub tension: Vector,
    #[serde(skip)]
    pub laplacian: Vector,
    #[serde(skip)]
    pub curvature: Vector,
    #[serde(skip)]
    pub bitension: Vector,
    pub b_norm_sq: f64,
    pub b_norm_sq_horizontal: f64,
}

/// Below this tension norm the bitension is normalized by `1 + |B|²` only.
pub const TENSION_FLOOR: f64 = 1e-6;

impl BitensionSample {
    pub fn tension_norm(&self) -> f64 {
        self.tension.norm()
    }

    pub fn bitension_norm(&self) -> f64 {
        self.bitension.norm()
    }

    /// `|τ|(1 + |B|²)`, with `|τ|` replaced by 1 when it vanishes.
    pub fn normalizer(&self) -> f64 {
        let t = self.tension_norm();
        let t = if t > TENSION_FLOOR { t } else { 1.0 };
        t * (1.0 + self.b_norm_sq)
    }

    pub fn normalized(&self) -> f64 {
        self.bitension_norm() / self.normalizer()
    }

    /// Component along the unit tension direction, normalized; changes sign
    /// where the bitension vanishes on a one-parameter family.
    pub fn signed(&self) -> f64 {
        let t = self.tension_norm();
        if t <= TENSION_FLOOR {
            return 0.0;
        }
        self.bitension.dot(&self.tension) / t / self.normalizer()
    }
}

fn bitension(im: &Immersion, p: &EmbeddedPoint, ladder: &StepLadder, full: bool) -> Result<BitensionSample> {
    let table = im.form_table(p, &ladder.first)?;
    let tension = if full { table.tension() } else { table.pseudo_tension() };
    let section = if full {
        SectionFieldOracle::tension(im, ladder.first)
    } else {
        SectionFieldOracle::pseudo_tension(im, ladder.first)
    };
    let laplacian = rough_laplacian(&section, im, p, &ladder.second, full)?;
    let mut images = frame_images(im, p, &ladder.first)?;
    if !full {
        images.pop();
    }
    let curvature = curvature_contraction(im.ambient(), &table.image, &tension, &images)?;
    let bitension = &laplacian - &curvature;
    Ok(BitensionSample {
        tension,
        laplacian,
        curvature,
        bitension,
        b_norm_sq: table.norm_sq_full(),
        b_norm_sq_horizontal: table.norm_sq_horizontal(),
    })
}

/// `τ_{b,2} = Δ_b τ_b - Σ R(τ_b, dφ X_i) dφ X_i`, evaluated from its
/// definition.
pub fn pseudo_bitension(im: &Immersion, p: &EmbeddedPoint, ladder: &StepLadder) -> Result<BitensionSample> {
    bitension(im, p, ladder, false)
}

/// `τ_2 = Δ̄ τ - Σ R(τ, dφ e_j) dφ e_j` over the full frame.
pub fn riemannian_bitension(im: &Immersion, p: &EmbeddedPoint, ladder: &StepLadder) -> Result<BitensionSample> {
    bitension(im, p, ladder, true)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct BitensionStats {
    pub points: usize,
    pub mean_tension: f64,
    pub mean_normalized: f64,
    pub max_normalized: f64,
    pub mean_signed: f64,
}

impl BitensionStats {
    pub fn from_samples(samples: &[BitensionSample]) -> Self {
        let k = samples.len().max(1) as f64;
        Self {
            points: samples.len(),
            mean_tension: samples.iter().map(BitensionSample::tension_norm).sum::<f64>() / k,
            mean_normalized: samples.iter().map(BitensionSample::normalized).sum::<f64>() / k,
            max_normalized: samples.iter().map(BitensionSample::normalized).fold(0.0, f64::max),
            mean_signed: samples.iter().map(BitensionSample::signed).sum::<f64>() / k,
        }
    }
}

/// Residual of an identity `lhs = rhs` with the scale used to make it relative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub lhs_norm: f64,
    pub residual: f64,
    pub scale: f64,
}

impl IdentityResidual {
    fn new(lhs: &Vector, rhs: &Vector, scale: f64) -> Self {
        Self { lhs_norm: lhs.norm(), residual: (lhs - rhs).norm(), scale }
    }

    pub fn relative(&self) -> f64 {
        if self.scale > 1e-8 {
            self.residual / self.scale
        } else {
            self.residual
        }
    }
}

/// `B(e_a, w)` for a frame index `a` and a tangent vector `w`, by linearity.
fn form_against(im: &Immersion, table: &FormTable, a: usize, w: &Vector) -> Vector {
    let src = im.source();
    let p = &table.frame.base;
    table
        .frame
        .vectors()
        .iter()
        .enumerate()
        .fold(Vector::zeros(table.image.ambient_dim()), |acc, (b, e)| acc + &table.entries[a][b] * src.metric(p, w, e.comps()))
}

/// Weitzenböck identity for `dφ(X)` split into horizontal and `T` parts:
///
/// `Σ_k (∇̃_{X_k}B)(X_k, X) = ∇̄_X τ - Σ_e {R^h(dφX, dφe)dφe - dφ(R(X,e)e)} - (∇̃_T B)(T, X)`
///
/// with `e` running over the full frame. The source curvature is computed by
/// nested differences of the Levi-Civita connection.
pub fn weitzenbock_residual(im: &Immersion, p: &EmbeddedPoint, x: &VectorFieldOracle, ladder: &StepLadder) -> Result<IdentityResidual> {
    let src = *im.source();
    let (c1, c2) = (ladder.first, ladder.second);
    let field = src.frame_field(p)?;
    let table = im.form_table_with(p, &field, &c1)?;
    let frame = table.frame.clone();
    let m = frame.horiz.len();
    let xp = x.eval(p)?.into_comps();

    let tensor_derivative = |a: usize| -> Result<Vector> {
        let e = if a < m { frame.horiz[a].comps().clone() } else { frame.reeb.comps().clone() };
        let curve = |t: f64| if a < m { src.horizontal_geodesic(p, &e, t) } else { src.reeb_geodesic(p, t) };
        let velocity = |t: f64, q: &EmbeddedPoint| {
            if a < m {
                src.horizontal_geodesic_velocity(p, &e, t)
            } else {
                src.reeb(q).into_comps()
            }
        };
        let section = |t: f64| -> Result<Vector> {
            let q = curve(t)?;
            im.form_normal(&q, &velocity(t, &q), x, &c1)
        };
        let d = im.covariant_along_curve(curve, section, c2.h2(), c2.richardson())?;
        let nabla_x = src.covariant_derivative(p, &e, x, &c1)?;
        Ok(d - form_against(im, &table, a, nabla_x.comps()))
    };

    let mut lhs = Vector::zeros(table.image.ambient_dim());
    for a in 0..m {
        lhs += tensor_derivative(a)?;
    }
    let reeb_term = tensor_derivative(m)?;

    let tau = SectionFieldOracle::tension(im, c1);
    let nabla_tau = im.covariant_along_curve(|t| p.retract(&(&xp * t)), |t| tau.eval(&p.retract(&(&xp * t))?), c2.h2(), c2.richardson())?;

    let dx = im.pushforward(p, &xp, &c1)?;
    let mut curvature = Vector::zeros(table.image.ambient_dim());
    // The two curvature terms cancel for totally geodesic maps, so their
    // individual sizes set the scale.
    let mut curvature_scale = 0.0;
    for e_field in field.fields() {
        let e = e_field.eval(p)?;
        let de = im.pushforward(p, e.comps(), &c1)?;
        let ambient_term = im.ambient().curvature(&dx, &de, &de)?.into_comps();
        let source_term = src.curvature_fd(p, x, &e_field, &e_field, &c2)?;
        curvature_scale += ambient_term.norm();
        curvature += ambient_term - im.pushforward(p, source_term.comps(), &c1)?.into_comps();
    }
    let rhs = &nabla_tau - &curvature - &reeb_term;
    let scale = [lhs.norm(), nabla_tau.norm(), curvature_scale, reeb_term.norm()].into_iter().fold(0.0, f64::max);
    Ok(IdentityResidual::new(&lhs, &rhs, scale))
}

/// Hypothesis defects of the pseudo-biharmonic characterization at a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Hypotheses {
    pub admissibility_defect: f64,
    pub parallelism_defect: f64,
}

impl Hypotheses {
    pub fn evaluate(im: &Immersion, p: &EmbeddedPoint, ladder: &StepLadder) -> Result<Self> {
        Ok(Self {
            admissibility_defect: im.admissibility_defect(p, &ladder.first)?,
            parallelism_defect: im.mean_curvature_parallelism_defect(p, ladder)?,
        })
    }

    pub fn check(&self, tol: f64) -> Result<()> {
        if self.admissibility_defect > tol {
            return Err(GeomError::Precondition(format!(
                "admissibility defect {:.3e} exceeds {tol:.1e}",
                self.admissibility_defect
            )));
        }
        if self.parallelism_defect > tol {
            return Err(GeomError::Precondition(format!(
                "parallelism defect {:.3e} exceeds {tol:.1e}",
                self.parallelism_defect
            )));
        }
        Ok(())
    }
}

/// Residual of the closed form of `-Δ_b τ_b` for admissible immersions with
/// parallel pseudo mean curvature:
///
/// `-Δ_b τ_b = Σ_{j,k} <τ_b, R(dφX_j, dφX_k)dφX_k> dφX_j + Σ_j <τ_b, R(dφX_j, dφT)dφT> dφX_j
///             - Σ_{i,j} <τ_b, B(X_i,X_j)> B(X_i,X_j)`.
pub fn tension_laplacian_residual(im: &Immersion, p: &EmbeddedPoint, ladder: &StepLadder, tol_defect: f64) -> Result<IdentityResidual> {
    Hypotheses::evaluate(im, p, ladder)?.check(tol_defect)?;
    let table = im.form_table(p, &ladder.first)?;
    let tau = table.pseudo_tension();
    let section = SectionFieldOracle::pseudo_tension(im, ladder.first);
    let lhs = -delta_b_section(&section, im, p, &ladder.second)?;
    let images = frame_images(im, p, &ladder.first)?;
    let m = images.len() - 1;
    let ambient = im.ambient();
    let mut rhs = Vector::zeros(tau.len());
    for j in 0..m {
        let mut coeff = 0.0;
        for k in 0..=m {
            coeff += tau.dot(ambient.curvature(&images[j], &images[k], &images[k])?.comps());
        }
        rhs += images[j].comps() * coeff;
    }
    for i in 0..m {
        for j in 0..m {
            let b = &table.entries[i][j];
            rhs -= b * tau.dot(b);
        }
    }
    let scale = lhs.norm().max(rhs.norm());
    Ok(IdentityResidual::new(&lhs, &rhs, scale))
}

/// `|Σ_k R(τ_b, dφX_k)dφX_k - 2n τ_b|` for sphere targets.
pub fn sphere_contraction_residual(im: &Immersion, p: &EmbeddedPoint, cfg: &FdConfig) -> Result<f64> {
    let AmbientModel::Sphere { .. } = im.ambient() else {
        return Err(GeomError::Domain("contraction identity is stated for sphere targets".into()));
    };
    let table = im.form_table(p, cfg)?;
    let tau = table.pseudo_tension();
    let mut images = frame_images(im, p, cfg)?;
    images.pop();
    let c = curvature_contraction(im.ambient(), &table.image, &tau, &images)?;
    let two_n = (2 * im.source().n()) as f64;
    Ok((c - tau * two_n).norm())
}

/// Largest normal component of `R(dφX_j, dφX_k)dφX_k` over horizontal pairs.
pub fn curvature_normal_residual(im: &Immersion, p: &EmbeddedPoint, cfg: &FdConfig) -> Result<f64> {
    let basis = im.tangent_basis(p, cfg)?;
    let mut images = frame_images(im, p, cfg)?;
    images.pop();
    let mut worst: f64 = 0.0;
    for a in &images {
        for b in &images {
            let r = im.ambient().curvature(a, b, b)?;
            worst = worst.max(im.normal_part(&basis, r.comps()).norm());
        }
    }
    Ok(worst)
}

/// Pairings of the complex structure with the unit normal for projective
/// targets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComplexPairings {
    /// `h(ξ, Jξ)`.
    pub normal_self: f64,
    /// `h(J dφ(T), ξ)`.
    pub reeb_normal: f64,
    /// `|J dφ(T) - h(J dφ(T), ξ) ξ|`.
    pub reeb_tangential: f64,
}

pub fn complex_pairings(im: &Immersion, p: &EmbeddedPoint, cfg: &FdConfig) -> Result<ComplexPairings> {
    let AmbientModel::ComplexProjective { .. } = im.ambient() else {
        return Err(GeomError::Domain("complex pairings need a projective target".into()));
    };
    let xi = im.unit_normal(p)?;
    let reeb = im.source().reeb(p);
    let jt = mul_i(im.pushforward(p, reeb.comps(), cfg)?.comps());
    let reeb_normal = jt.dot(&xi);
    Ok(ComplexPairings {
        normal_self: xi.dot(&mul_i(&xi)),
        reeb_normal,
        reeb_tangential: (&jt - &xi * reeb_normal).norm(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub bitension: f64,
    pub condition: f64,
    pub defect: f64,
    pub tangency: f64,
    pub nonzero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { bitension: 1e-2, condition: 0.05, defect: 1e-4, tangency: 1e-3, nonzero: 1e-6 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BiharmonicVerdict {
    pub point: Vec<f64>,
    pub hypotheses: Hypotheses,
    pub hypotheses_met: bool,
    pub tau_b_norm: f64,
    /// Normalized `|τ_{b,2}|`.
    pub tau_b2_norm: f64,
    pub tau_b2_signed: f64,
    pub condition_lhs: f64,
    pub condition_rhs: f64,
    /// `|B|² - |B(T,T)|²`, the full-norm form of the condition.
    pub full_condition_lhs: f64,
    /// `| |B|² - |B|_{H×H}|² - |B(T,T)|² |`, zero for admissible immersions.
    pub decomposition_residual: f64,
    pub case_tag: Option<CaseTag>,
    pub bitension_pass: bool,
    pub condition_pass: bool,
    pub pass: bool,
    pub diagnostic: Option<String>,
}

/// Pseudo-biharmonicity verdict at `p`: the direct bitension test and the
/// curvature condition, evaluated independently.
pub fn characterize(im: &Immersion, p: &EmbeddedPoint, ladder: &StepLadder, tol: &Tolerances) -> Result<BiharmonicVerdict> {
    let hypotheses = Hypotheses::evaluate(im, p, ladder)?;
    let hypotheses_met = hypotheses.check(tol.defect).is_ok();
    let table = im.form_table(p, &ladder.first)?;
    let sample = pseudo_bitension(im, p, ladder)?;
    let n = im.source().n() as f64;
    let lhs = table.norm_sq_horizontal();
    let reeb_sq = table.reeb_entry().norm_squared();
    let full = table.norm_sq_full();

    let mut diagnostic = None;
    let (case_tag, rhs) = match *im.ambient() {
        AmbientModel::Sphere { .. } => (Some(CaseTag::Sphere), 2.0 * n),
        AmbientModel::ComplexProjective { c, .. } => {
            let h = complex_pairings(im, p, &ladder.first)?.reeb_normal.abs();
            if h < tol.tangency {
                (Some(CaseTag::CpTangentCase), c * (2.0 * n + 3.0) / 4.0)
            } else if h > 1.0 - tol.tangency {
                (Some(CaseTag::CpNormalCase), n * c / 2.0)
            } else {
                diagnostic = Some(format!("neither projective case applies: |h(J dφ(T), ξ)| = {h:.6}"));
                (None, f64::NAN)
            }
        }
    };
    if !hypotheses_met {
        diagnostic = Some(format!(
            "hypotheses not met (admissibility {:.3e}, parallelism {:.3e})",
            hypotheses.admissibility_defect, hypotheses.parallelism_defect
        ));
    }

    let tau_b_norm = sample.tension_norm();
    let tau_b2_norm = sample.normalized();
    let bitension_pass = tau_b2_norm < tol.bitension;
    let condition_pass = case_tag.is_some() && (lhs - rhs).abs() < tol.condition;
    let pass = hypotheses_met
        && case_tag.is_some()
        && bitension_pass
        && (tau_b_norm <= tol.nonzero || condition_pass);
    Ok(BiharmonicVerdict {
        point: p.coords().iter().copied().collect(),
        hypotheses,
        hypotheses_met,
        tau_b_norm,
        tau_b2_norm,
        tau_b2_signed: sample.signed(),
        condition_lhs: lhs,
        condition_rhs: rhs,
        full_condition_lhs: full - reeb_sq,
        decomposition_residual: (full - lhs - reeb_sq).abs(),
        case_tag,
        bitension_pass,
        condition_pass,
        pass,
        diagnostic,
    })
}

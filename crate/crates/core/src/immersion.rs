//! First-order geometry of an isometric immersion of a source sphere into a
//! target model: pushforward, second fundamental form, tension fields, shape
//! operator and the admissibility and parallelism defects.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::ambient::AmbientModel;
use crate::cr::{ContactFrame, FrameField, SourceSphere};
use crate::error::{GeomError, Result};
use crate::geometry::{central_derivative, check_step, EmbeddedPoint, FdConfig, TangentVec, Vector, VectorFieldOracle};

const TANGENTIAL_FAIL: f64 = 1e-4;

pub type MapFn = dyn Fn(&EmbeddedPoint) -> Result<EmbeddedPoint> + Send + Sync;
/// Unit normal at the image of a source point, in ambient components.
pub type NormalFn = dyn Fn(&EmbeddedPoint) -> Result<Vector> + Send + Sync;

/// Step sizes for the two levels of nesting used by second-order quantities.
///
/// `first` drives the second fundamental form (outer `h1`, inner `h2`);
/// `second` drives derivatives of sections that are themselves built from
/// the second fundamental form, such as the sub-Laplacian of the pseudo
/// tension field. The second level needs larger steps to keep the
/// accumulated roundoff of the inner levels small.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepLadder {
    pub first: FdConfig,
    pub second: FdConfig,
}

impl StepLadder {
    pub fn new(first: FdConfig, second: FdConfig) -> Self {
        Self { first, second }
    }
}

impl Default for StepLadder {
    fn default() -> Self {
        Self {
            first: FdConfig::new(2e-3, 1e-3, true).expect("valid steps"),
            second: FdConfig::new(1e-2, 5e-3, true).expect("valid steps"),
        }
    }
}

#[derive(Clone)]
pub struct Immersion {
    label: String,
    source: SourceSphere,
    ambient: AmbientModel,
    map: Arc<MapFn>,
    normal: Option<Arc<NormalFn>>,
    isometric: bool,
}

impl fmt::Debug for Immersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Immersion")
            .field("label", &self.label)
            .field("source", &self.source)
            .field("ambient", &self.ambient)
            .field("has_normal", &self.normal.is_some())
            .finish()
    }
}

/// An ambient vector at `φ(base_src)` split into its parts tangent and normal
/// to the image.
#[derive(Clone, Debug)]
pub struct NormalSection {
    pub base_src: EmbeddedPoint,
    pub image: EmbeddedPoint,
    pub value: Vector,
    pub tangential: Vector,
    pub normal: Vector,
}

/// Second fundamental form on a full adapted frame `{X_1..X_2n, T}`.
#[derive(Clone, Debug)]
pub struct FormTable {
    pub frame: ContactFrame,
    pub image: EmbeddedPoint,
    /// Orthonormal basis of the image tangent space.
    pub tangent_basis: Vec<Vector>,
    /// Normal parts, `entries[a][b] = B(e_a, e_b)`.
    pub entries: Vec<Vec<Vector>>,
    pub max_tangential: f64,
    pub max_asymmetry: f64,
}

impl FormTable {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    /// `Σ_{a,b ≤ 2n} |B(X_a, X_b)|²`.
    pub fn norm_sq_horizontal(&self) -> f64 {
        let m = self.size() - 1;
        (0..m).flat_map(|a| (0..m).map(move |b| (a, b))).map(|(a, b)| self.entries[a][b].norm_squared()).sum()
    }

    pub fn norm_sq_full(&self) -> f64 {
        self.entries.iter().flatten().map(|v| v.norm_squared()).sum()
    }

    pub fn pseudo_tension(&self) -> Vector {
        let m = self.size() - 1;
        (0..m).fold(Vector::zeros(self.image.ambient_dim()), |acc, a| acc + &self.entries[a][a])
    }

    pub fn reeb_entry(&self) -> &Vector {
        let m = self.size() - 1;
        &self.entries[m][m]
    }

    pub fn tension(&self) -> Vector {
        self.pseudo_tension() + self.reeb_entry()
    }

    /// `max_a |B(X_a, T)|`.
    pub fn admissibility_defect(&self) -> f64 {
        let m = self.size() - 1;
        (0..m).map(|a| self.entries[a][m].norm().max(self.entries[m][a].norm())).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ShapeSpectrum {
    #[serde(skip)]
    pub normal: Vector,
    pub eigenvalues: Vec<f64>,
    pub reeb_eigenvalue: f64,
    /// Angle between `T` and the eigenvector carrying `reeb_eigenvalue`.
    pub reeb_angle: f64,
    pub asymmetry: f64,
}

impl Immersion {
    pub fn new<F>(label: impl Into<String>, source: SourceSphere, ambient: AmbientModel, map: F) -> Self
    where
        F: Fn(&EmbeddedPoint) -> Result<EmbeddedPoint> + Send + Sync + 'static,
    {
        Self { label: label.into(), source, ambient, map: Arc::new(map), normal: None, isometric: true }
    }

    pub fn with_normal<F>(mut self, normal: F) -> Self
    where
        F: Fn(&EmbeddedPoint) -> Result<Vector> + Send + Sync + 'static,
    {
        self.normal = Some(Arc::new(normal));
        self
    }

    /// Drops the isometry assumption. `∇dφ` then has a genuine tangential
    /// part, so it is no longer treated as an error; the normal part is still
    /// the second fundamental form of the image on `(dφX, dφY)`.
    pub fn non_isometric(mut self) -> Self {
        self.isometric = false;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn source(&self) -> &SourceSphere {
        &self.source
    }

    pub fn ambient(&self) -> &AmbientModel {
        &self.ambient
    }

    pub fn codimension(&self) -> usize {
        self.ambient.dim().saturating_sub(self.source.dim())
    }

    pub fn image(&self, p: &EmbeddedPoint) -> Result<EmbeddedPoint> {
        self.source.check_point(p)?;
        let q = (self.map)(p)?;
        self.ambient.check_point(&q)?;
        Ok(q)
    }

    /// Unit normal at `φ(p)`, when one is available.
    pub fn unit_normal(&self, p: &EmbeddedPoint) -> Result<Vector> {
        match &self.normal {
            Some(f) => f(p),
            None => Err(GeomError::UnsupportedCodimension(self.codimension())),
        }
    }

    /// Ambient derivative of the (lifted) map along `v`, before projection.
    fn map_derivative(&self, p: &EmbeddedPoint, v: &Vector, h: f64, richardson: bool) -> Result<Vector> {
        check_step(h, p)?;
        central_derivative(h, richardson, |t| Ok(self.image(&p.retract(&(v * t))?)?.coords().clone()))
    }

    /// `dφ(v)` with inner step `cfg.h2()`.
    pub fn pushforward(&self, p: &EmbeddedPoint, v: &Vector, cfg: &FdConfig) -> Result<TangentVec> {
        let image = self.image(p)?;
        let d = self.map_derivative(p, v, cfg.h2(), cfg.richardson())?;
        Ok(self.ambient.tangent_projection(&image, &d))
    }

    /// Covariant derivative at `t = 0` of a section along `φ ∘ curve`.
    ///
    /// `section(t)` must return the section at `φ(curve(t))` as an ambient
    /// vector; the lifted curve velocity is recomputed with the same step.
    pub fn covariant_along_curve<C, S>(&self, curve: C, mut section: S, h: f64, richardson: bool) -> Result<Vector>
    where
        C: Fn(f64) -> Result<EmbeddedPoint>,
        S: FnMut(f64) -> Result<Vector>,
    {
        let p = curve(0.0)?;
        check_step(h, &p)?;
        let image = self.image(&p)?;
        let velocity = central_derivative(h, richardson, |t| Ok(self.image(&curve(t)?)?.coords().clone()))?;
        let value = section(0.0)?;
        let derivative = central_derivative(h, richardson, &mut section)?;
        self.ambient.covariant_along(&image, &velocity, &value, &derivative)
    }

    /// Unprojected `∇̄_X dφ(Y) - dφ(∇_X Y)` at `p`.
    fn form_raw(&self, p: &EmbeddedPoint, x: &Vector, y: &VectorFieldOracle, cfg: &FdConfig) -> Result<Vector> {
        let inner = cfg.inner();
        let curve = |t: f64| p.retract(&(x * t));
        let pushed = |t: f64| -> Result<Vector> {
            let q = curve(t)?;
            let yq = y.eval(&q)?;
            Ok(self.pushforward(&q, yq.comps(), &inner)?.into_comps())
        };
        let along = self.covariant_along_curve(curve, pushed, cfg.h1(), cfg.richardson())?;
        let nabla = self.source.covariant_derivative(p, x, y, cfg)?;
        let correction = self.pushforward(p, nabla.comps(), &inner)?;
        Ok(along - correction.into_comps())
    }

    /// Orthonormal basis of `dφ(T_pM)` from the images of a frame.
    fn image_basis(&self, p: &EmbeddedPoint, frame: &ContactFrame, cfg: &FdConfig) -> Result<Vec<Vector>> {
        let mut basis: Vec<Vector> = Vec::new();
        for (index, e) in frame.vectors().iter().enumerate() {
            let mut w = self.pushforward(p, e.comps(), cfg)?.into_comps();
            for _ in 0..2 {
                for b in &basis {
                    let c = w.dot(b);
                    w -= b * c;
                }
            }
            let norm = w.norm();
            if norm < 1e-8 {
                return Err(GeomError::DegenerateFrame { index, norm });
            }
            basis.push(w / norm);
        }
        Ok(basis)
    }

    fn split(&self, p: &EmbeddedPoint, image: &EmbeddedPoint, basis: &[Vector], value: Vector) -> NormalSection {
        let tangential = basis.iter().fold(Vector::zeros(value.len()), |acc, b| acc + b * value.dot(b));
        let normal = &value - &tangential;
        NormalSection { base_src: p.clone(), image: image.clone(), value, tangential, normal }
    }

    fn checked_split(&self, p: &EmbeddedPoint, image: &EmbeddedPoint, basis: &[Vector], value: Vector) -> Result<NormalSection> {
        let s = self.split(p, image, basis, value);
        let residual = s.tangential.norm();
        if self.isometric && residual > TANGENTIAL_FAIL * (1.0 + s.normal.norm()) {
            return Err(GeomError::Consistency(format!(
                "second fundamental form has tangential part {residual:.3e} at {p}"
            )));
        }
        Ok(s)
    }

    /// `B(X, Y)` at `p`, split into normal value and tangential residual.
    pub fn second_fundamental_form(
        &self,
        p: &EmbeddedPoint,
        x: &VectorFieldOracle,
        y: &VectorFieldOracle,
        cfg: &FdConfig,
    ) -> Result<NormalSection> {
        let image = self.image(p)?;
        let frame = self.source.contact_frame_at(p)?;
        let basis = self.image_basis(p, &frame, &cfg.inner())?;
        let xp = x.eval(p)?;
        let raw = self.form_raw(p, xp.comps(), y, cfg)?;
        self.checked_split(p, &image, &basis, raw)
    }

    /// Normal part of `B(x, Y)` at `p` for a vector `x` and a field `Y`.
    pub fn form_normal(&self, p: &EmbeddedPoint, x: &Vector, y: &VectorFieldOracle, cfg: &FdConfig) -> Result<Vector> {
        let image = self.image(p)?;
        let frame = self.source.contact_frame_at(p)?;
        let basis = self.image_basis(p, &frame, &cfg.inner())?;
        Ok(self.checked_split(p, &image, &basis, self.form_raw(p, x, y, cfg)?)?.normal)
    }

    /// Orthonormal basis of the image tangent space at `p`.
    pub fn tangent_basis(&self, p: &EmbeddedPoint, cfg: &FdConfig) -> Result<Vec<Vector>> {
        let frame = self.source.contact_frame_at(p)?;
        self.image_basis(p, &frame, cfg)
    }

    /// Normal part of an ambient vector at `φ(p)` against a tangent basis.
    pub fn normal_part(&self, basis: &[Vector], v: &Vector) -> Vector {
        basis.iter().fold(v.clone(), |acc, b| acc - b * v.dot(b))
    }

    /// Trace of `B` over the given frame field's horizontal vectors.
    pub fn pseudo_tension_with(&self, p: &EmbeddedPoint, field: &FrameField, cfg: &FdConfig) -> Result<NormalSection> {
        self.trace(p, field, cfg, false)
    }

    pub fn pseudo_tension(&self, p: &EmbeddedPoint, cfg: &FdConfig) -> Result<NormalSection> {
        self.trace(p, &self.source.frame_field(p)?, cfg, false)
    }

    pub fn full_tension(&self, p: &EmbeddedPoint, cfg: &FdConfig) -> Result<NormalSection> {
        self.trace(p, &self.source.frame_field(p)?, cfg, true)
    }

    fn trace(&self, p: &EmbeddedPoint, field: &FrameField, cfg: &FdConfig, with_reeb: bool) -> Result<NormalSection> {
        let image = self.image(p)?;
        let frame = field.at(p)?;
        let basis = self.image_basis(p, &frame, &cfg.inner())?;
        let count = if with_reeb { 2 * self.source.n() + 1 } else { 2 * self.source.n() };
        let mut sum = Vector::zeros(image.ambient_dim());
        for k in 0..count {
            let f = field.vector_field(k);
            let xp = f.eval(p)?;
            sum += self.form_raw(p, xp.comps(), &f, cfg)?;
        }
        self.checked_split(p, &image, &basis, sum)
    }

    /// `B` on every pair of an adapted frame anchored at `p`.
    pub fn form_table(&self, p: &EmbeddedPoint, cfg: &FdConfig) -> Result<FormTable> {
        self.form_table_with(p, &self.source.frame_field(p)?, cfg)
    }

    pub fn form_table_with(&self, p: &EmbeddedPoint, field: &FrameField, cfg: &FdConfig) -> Result<FormTable> {
        let image = self.image(p)?;
        let frame = field.at(p)?;
        let basis = self.image_basis(p, &frame, &cfg.inner())?;
        let fields = field.fields();
        let m = fields.len();
        let mut entries = vec![vec![Vector::zeros(image.ambient_dim()); m]; m];
        let mut max_tangential: f64 = 0.0;
        for (a, fa) in fields.iter().enumerate() {
            let xa = fa.eval(p)?;
            for (b, fb) in fields.iter().enumerate() {
                let s = self.checked_split(p, &image, &basis, self.form_raw(p, xa.comps(), fb, cfg)?)?;
                max_tangential = max_tangential.max(s.tangential.norm());
                entries[a][b] = s.normal;
            }
        }
        let mut max_asymmetry: f64 = 0.0;
        for (a, row) in entries.iter().enumerate() {
            for (b, e) in row.iter().enumerate().take(a) {
                max_asymmetry = max_asymmetry.max((e - &entries[b][a]).norm());
            }
        }
        Ok(FormTable { frame, image, tangent_basis: basis, entries, max_tangential, max_asymmetry })
    }

    /// Principal curvatures of the unit normal on the full tangent space.
    pub fn shape_spectrum(&self, p: &EmbeddedPoint, cfg: &FdConfig) -> Result<ShapeSpectrum> {
        let table = self.form_table(p, cfg)?;
        self.spectrum_from(p, &table)
    }

    pub fn spectrum_from(&self, p: &EmbeddedPoint, table: &FormTable) -> Result<ShapeSpectrum> {
        let xi = self.unit_normal(p)?;
        let m = table.size();
        let a = DMatrix::from_fn(m, m, |i, j| table.entries[i][j].dot(&xi));
        let asymmetry = (&a - a.transpose()).amax();
        let sym = (&a + a.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let reeb_col = (0..m)
            .max_by(|&i, &j| eig.eigenvectors[(m - 1, i)].abs().total_cmp(&eig.eigenvectors[(m - 1, j)].abs()))
            .unwrap_or(0);
        let reeb_eigenvalue = eig.eigenvalues[reeb_col];
        let reeb_angle = eig.eigenvectors[(m - 1, reeb_col)].abs().min(1.0).acos();
        let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(f64::total_cmp);
        Ok(ShapeSpectrum { normal: xi, eigenvalues, reeb_eigenvalue, reeb_angle, asymmetry })
    }

    pub fn admissibility_defect(&self, p: &EmbeddedPoint, cfg: &FdConfig) -> Result<f64> {
        Ok(self.form_table(p, cfg)?.admissibility_defect())
    }

    pub fn b_norm_horizontal(&self, p: &EmbeddedPoint, cfg: &FdConfig) -> Result<f64> {
        Ok(self.form_table(p, cfg)?.norm_sq_horizontal())
    }

    pub fn b_norm_full(&self, p: &EmbeddedPoint, cfg: &FdConfig) -> Result<f64> {
        Ok(self.form_table(p, cfg)?.norm_sq_full())
    }

    /// Largest normal component of `∇̄_e τ_b` over the frame directions,
    /// with `τ_b` from `ladder.first` and the outer derivative from
    /// `ladder.second`.
    pub fn mean_curvature_parallelism_defect(&self, p: &EmbeddedPoint, ladder: &StepLadder) -> Result<f64> {
        let frame = self.source.contact_frame_at(p)?;
        let image = self.image(p)?;
        let basis = self.image_basis(p, &frame, &ladder.first.inner())?;
        let outer = ladder.second;
        let mut worst: f64 = 0.0;
        for e in frame.vectors() {
            let curve = |t: f64| p.retract(&(e.comps() * t));
            let tau = |t: f64| Ok(self.pseudo_tension(&curve(t)?, &ladder.first)?.normal);
            let d = self.covariant_along_curve(curve, tau, outer.h2(), outer.richardson())?;
            worst = worst.max(self.split(p, &image, &basis, d).normal.norm());
        }
        Ok(worst)
    }

    /// Max deviation of `h(dφ e_a, dφ e_b)` from `δ_ab` over an adapted frame.
    pub fn isometry_defect(&self, p: &EmbeddedPoint, cfg: &FdConfig) -> Result<f64> {
        let frame = self.source.contact_frame_at(p)?;
        let images: Vec<Vector> = frame
            .vectors()
            .iter()
            .map(|e| self.pushforward(p, e.comps(), cfg).map(TangentVec::into_comps))
            .collect::<Result<_>>()?;
        let mut worst: f64 = 0.0;
        for (a, u) in images.iter().enumerate() {
            for (b, v) in images.iter().enumerate() {
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((u.dot(v) - want).abs());
            }
        }
        Ok(worst)
    }
}

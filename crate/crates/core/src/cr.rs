//! Pseudohermitian structure on the source sphere `S^{2n+1}(R) ⊂ C^{n+1}`.
//!
//! The metric is the round metric with the Reeb direction rescaled by a factor
//! `s` (a Berger sphere); `s = 1` is the induced round metric. Writing `T0`
//! for the round-unit Reeb field `i x / R` and `η = <·, T0>`, the metric is
//! `g = <·,·> + (s² - 1) η ⊗ η`, the characteristic field is `T = T0 / s`, the
//! contact form is `θ = s η` so that `θ(T) = 1`, and the CR rotation on the
//! horizontal space `H = {x, i x}^⊥` is ambient multiplication by `i`.
//!
//! Since `T0` is a unit Killing field of the round metric, the Levi-Civita
//! connection of `g` is
//! `∇'_X Y = ∇_X Y + (s² - 1)(η(Y) ∇_X T0 + η(X) ∇_Y T0)`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::geometry::{
    central_derivative, complex_frame, derivative_along, mul_i, project_tangent, random_sphere_point, EmbeddedPoint,
    FdConfig, PointModel, TangentVec, Vector, VectorFieldOracle,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SourceSphere {
    n: usize,
    radius: f64,
    reeb_scale: f64,
}

impl SourceSphere {
    pub fn round(n: usize, radius: f64) -> Result<Self> {
        Self::squashed(n, radius, 1.0)
    }

    pub fn squashed(n: usize, radius: f64, reeb_scale: f64) -> Result<Self> {
        if n == 0 {
            return Err(GeomError::Domain("CR dimension n must be at least 1".into()));
        }
        if !(radius > 0.0 && radius.is_finite() && reeb_scale > 0.0 && reeb_scale.is_finite()) {
            return Err(GeomError::Domain(format!("invalid sphere radius {radius} or Reeb scale {reeb_scale}")));
        }
        Ok(Self { n, radius, reeb_scale })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn reeb_scale(&self) -> f64 {
        self.reeb_scale
    }

    /// Real dimension `2n + 1`.
    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn ambient_len(&self) -> usize {
        2 * self.n + 2
    }

    pub fn point(&self, coords: Vector) -> Result<EmbeddedPoint> {
        if coords.len() != self.ambient_len() {
            return Err(GeomError::Domain(format!("expected {} coordinates", self.ambient_len())));
        }
        EmbeddedPoint::on_sphere(coords, self.radius)
    }

    pub fn check_point(&self, p: &EmbeddedPoint) -> Result<()> {
        match p.model() {
            PointModel::Sphere { radius }
                if p.ambient_dim() == self.ambient_len() && ((radius - self.radius) / self.radius).abs() < 1e-12 =>
            {
                Ok(())
            }
            _ => Err(GeomError::Domain(format!(
                "point {p} is not on S^{}({})",
                self.dim(),
                self.radius
            ))),
        }
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<EmbeddedPoint> {
        random_sphere_point(rng, self.ambient_len(), self.radius)
    }

    /// `η(v) = <v, i x> / R`, the round dual of the unit Reeb direction.
    fn eta(&self, p: &EmbeddedPoint, v: &Vector) -> f64 {
        v.dot(&mul_i(p.coords())) / self.radius
    }

    pub fn metric(&self, p: &EmbeddedPoint, u: &Vector, v: &Vector) -> f64 {
        let s2 = self.reeb_scale * self.reeb_scale;
        u.dot(v) + (s2 - 1.0) * self.eta(p, u) * self.eta(p, v)
    }

    pub fn norm(&self, p: &EmbeddedPoint, v: &Vector) -> f64 {
        self.metric(p, v, v).max(0.0).sqrt()
    }

    pub fn reeb(&self, p: &EmbeddedPoint) -> TangentVec {
        let t = mul_i(p.coords()) / (self.radius * self.reeb_scale);
        TangentVec::from_parts(p.clone(), t)
    }

    pub fn theta(&self, p: &EmbeddedPoint, v: &Vector) -> f64 {
        self.reeb_scale * self.eta(p, v)
    }

    /// Component of an ambient vector in `H`, orthogonal to both `x` and `i x`.
    pub fn horizontal_part(&self, p: &EmbeddedPoint, v: &Vector) -> TangentVec {
        let t = project_tangent(p, v).into_comps();
        let ix = mul_i(p.coords()) / self.radius;
        let h = &t - &ix * t.dot(&ix);
        TangentVec::from_parts(p.clone(), h)
    }

    pub fn contact_frame_at(&self, p: &EmbeddedPoint) -> Result<ContactFrame> {
        self.build_frame(p, None)
    }

    /// Frame built from previously chosen seed axes, so that it varies
    /// smoothly with the base point.
    pub fn contact_frame_seeded(&self, p: &EmbeddedPoint, seeds: &[usize]) -> Result<ContactFrame> {
        self.build_frame(p, Some(seeds))
    }

    fn build_frame(&self, p: &EmbeddedPoint, seeds: Option<&[usize]>) -> Result<ContactFrame> {
        self.check_point(p)?;
        let x = p.coords().clone() / self.radius;
        let ix = mul_i(&x);
        let project = |v: &Vector| v - &x * v.dot(&x) - &ix * v.dot(&ix);
        let (basis, used) = complex_frame(self.ambient_len(), self.n, seeds, project)?;
        let horiz: Vec<TangentVec> = basis.into_iter().map(|c| TangentVec::from_parts(p.clone(), c)).collect();
        let m = horiz.len();
        let mut j_matrix = DMatrix::zeros(m, m);
        for (col, xj) in horiz.iter().enumerate() {
            let jx = project_tangent(p, &mul_i(xj.comps()));
            for (row, xi) in horiz.iter().enumerate() {
                j_matrix[(row, col)] = self.metric(p, xi.comps(), jx.comps());
            }
        }
        Ok(ContactFrame { base: p.clone(), reeb: self.reeb(p), horiz, j_matrix, seeds: used })
    }

    /// Frame field whose seeds are fixed at `anchor`.
    pub fn frame_field(&self, anchor: &EmbeddedPoint) -> Result<FrameField> {
        let frame = self.contact_frame_at(anchor)?;
        Ok(FrameField { source: *self, seeds: frame.seeds, mixing: None })
    }

    /// Geodesic `t -> cos(t/R) x + R sin(t/R) X` for a unit horizontal `X`.
    /// Horizontal great circles stay horizontal, so they are geodesics for
    /// every Reeb scale.
    pub fn horizontal_geodesic(&self, p: &EmbeddedPoint, x: &Vector, t: f64) -> Result<EmbeddedPoint> {
        let r = self.radius;
        let v = p.coords() * (t / r).cos() + x * (r * (t / r).sin());
        EmbeddedPoint::sphere_from_ambient(&v, r)
    }

    pub fn horizontal_geodesic_velocity(&self, p: &EmbeddedPoint, x: &Vector, t: f64) -> Vector {
        let r = self.radius;
        x * (t / r).cos() - p.coords() * ((t / r).sin() / r)
    }

    /// Integral curve of the unit characteristic field through `p`.
    pub fn reeb_geodesic(&self, p: &EmbeddedPoint, t: f64) -> Result<EmbeddedPoint> {
        let w = t / (self.radius * self.reeb_scale);
        let v = p.coords() * w.cos() + mul_i(p.coords()) * w.sin();
        EmbeddedPoint::sphere_from_ambient(&v, self.radius)
    }

    /// `∇_v T0` for the round metric.
    fn round_reeb_derivative(&self, p: &EmbeddedPoint, v: &Vector) -> Vector {
        project_tangent(p, &(mul_i(v) / self.radius)).into_comps()
    }

    /// Correction from the round connection to the Berger connection.
    fn squash_correction(&self, p: &EmbeddedPoint, x: &Vector, y: &Vector) -> Vector {
        let eps = self.reeb_scale * self.reeb_scale - 1.0;
        if eps == 0.0 {
            return Vector::zeros(x.len());
        }
        (self.round_reeb_derivative(p, x) * self.eta(p, y) + self.round_reeb_derivative(p, y) * self.eta(p, x)) * eps
    }

    /// Levi-Civita derivative of the field `y` along the vector `x` at `p`.
    pub fn covariant_derivative(&self, p: &EmbeddedPoint, x: &Vector, y: &VectorFieldOracle, cfg: &FdConfig) -> Result<TangentVec> {
        self.check_point(p)?;
        let dy = derivative_along(p, x, cfg.h1(), cfg.richardson(), |q| Ok(y.eval(q)?.into_comps()))?;
        let yp = y.eval(p)?;
        let round = project_tangent(p, &dy).into_comps();
        let corr = self.squash_correction(p, x, yp.comps());
        Ok(TangentVec::from_parts(p.clone(), round + corr))
    }

    pub fn levi_civita(&self, p: &EmbeddedPoint, x: &VectorFieldOracle, y: &VectorFieldOracle, cfg: &FdConfig) -> Result<TangentVec> {
        let xp = x.eval(p)?;
        self.covariant_derivative(p, xp.comps(), y, cfg)
    }

    fn ensure_horizontal(&self, p: &EmbeddedPoint, v: &Vector, what: &str) -> Result<()> {
        let th = self.theta(p, v).abs();
        if th > 1e-8 * v.norm().max(1.0) {
            return Err(GeomError::Domain(format!("{what} is not horizontal (θ = {th:.3e})")));
        }
        Ok(())
    }

    /// Tanaka-Webster derivative for horizontal arguments, realized as the
    /// horizontal projection of the Levi-Civita derivative.
    pub fn tanaka_webster_horizontal(
        &self,
        p: &EmbeddedPoint,
        x: &VectorFieldOracle,
        y: &VectorFieldOracle,
        cfg: &FdConfig,
    ) -> Result<TangentVec> {
        let xp = x.eval(p)?;
        self.ensure_horizontal(p, xp.comps(), "X")?;
        self.ensure_horizontal(p, y.eval(p)?.comps(), "Y")?;
        let lc = self.covariant_derivative(p, xp.comps(), y, cfg)?;
        Ok(self.horizontal_part(p, lc.comps()))
    }

    /// `R(X,Y)Z = ∇_X ∇_Y Z - ∇_Y ∇_X Z - ∇_[X,Y] Z` by nested differences:
    /// the inner derivatives use `cfg.inner()`, the outer ones `cfg`.
    pub fn curvature_fd(
        &self,
        p: &EmbeddedPoint,
        x: &VectorFieldOracle,
        y: &VectorFieldOracle,
        z: &VectorFieldOracle,
        cfg: &FdConfig,
    ) -> Result<TangentVec> {
        let inner = cfg.inner();
        let src = *self;
        let nested = |a: &VectorFieldOracle, b: &VectorFieldOracle| {
            let (a, b, z) = (a.clone(), b.clone(), z.clone());
            let field = VectorFieldOracle::new("nested", move |q| {
                let bq = b.eval(q)?;
                src.covariant_derivative(q, bq.comps(), &z, &inner)
            });
            let ap = a.eval(p)?;
            self.covariant_derivative(p, ap.comps(), &field, cfg)
        };
        let xyz = nested(x, y)?;
        let yxz = nested(y, x)?;
        let bracket = self.levi_civita(p, x, y, cfg)?.into_comps() - self.levi_civita(p, y, x, cfg)?.into_comps();
        let bz = self.covariant_derivative(p, &bracket, z, cfg)?;
        Ok(TangentVec::from_parts(p.clone(), xyz.into_comps() - yxz.into_comps() - bz.into_comps()))
    }

    /// Closed-form curvature of the round metric (`s = 1` only).
    pub fn round_curvature(&self, p: &EmbeddedPoint, x: &Vector, y: &Vector, z: &Vector) -> Result<TangentVec> {
        if self.reeb_scale != 1.0 {
            return Err(GeomError::Capability("closed-form curvature is only available for round spheres".into()));
        }
        let k = 1.0 / (self.radius * self.radius);
        Ok(TangentVec::from_parts(p.clone(), (x * y.dot(z) - y * x.dot(z)) * k))
    }

    pub fn pseudohermitian(&self) -> PseudohermitianData {
        PseudohermitianData { source: *self }
    }
}

/// Adapted frame `{X_1, ..., X_2n, T}` at a point.
#[derive(Clone, Debug)]
pub struct ContactFrame {
    pub base: EmbeddedPoint,
    pub horiz: Vec<TangentVec>,
    pub reeb: TangentVec,
    /// Matrix of `J` in the horizontal basis: `j[(i, k)] = g(X_i, J X_k)`.
    pub j_matrix: DMatrix<f64>,
    pub seeds: Vec<usize>,
}

impl ContactFrame {
    /// Horizontal vectors followed by `T`.
    pub fn vectors(&self) -> Vec<TangentVec> {
        let mut v = self.horiz.clone();
        v.push(self.reeb.clone());
        v
    }

    /// Max-norm deviation of the Gram matrix from the identity.
    pub fn gram_deviation(&self, source: &SourceSphere) -> f64 {
        let vs = self.vectors();
        let mut worst: f64 = 0.0;
        for (a, u) in vs.iter().enumerate() {
            for (b, v) in vs.iter().enumerate() {
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((source.metric(&self.base, u.comps(), v.comps()) - want).abs());
            }
        }
        worst
    }

    /// Max deviation of `J² = -1` on the horizontal span.
    pub fn j_square_deviation(&self) -> f64 {
        let m = self.j_matrix.nrows();
        let sq = &self.j_matrix * &self.j_matrix + DMatrix::<f64>::identity(m, m);
        sq.amax()
    }
}

/// Smooth frame field obtained by reusing the seed axes of an anchor point,
/// optionally re-mixed by a constant orthogonal matrix on the horizontal part.
#[derive(Clone, Debug)]
pub struct FrameField {
    source: SourceSphere,
    seeds: Vec<usize>,
    mixing: Option<DMatrix<f64>>,
}

impl FrameField {
    pub fn source(&self) -> &SourceSphere {
        &self.source
    }

    pub fn with_mixing(mut self, mixing: DMatrix<f64>) -> Result<Self> {
        let m = 2 * self.source.n();
        if mixing.nrows() != m || mixing.ncols() != m {
            return Err(GeomError::Config(format!("mixing matrix must be {m}x{m}")));
        }
        let dev = (mixing.transpose() * &mixing - DMatrix::<f64>::identity(m, m)).amax();
        if dev > 1e-12 {
            return Err(GeomError::Config(format!("mixing matrix is not orthogonal (deviation {dev:.3e})")));
        }
        self.mixing = Some(mixing);
        Ok(self)
    }

    pub fn at(&self, q: &EmbeddedPoint) -> Result<ContactFrame> {
        let mut frame = self.source.contact_frame_seeded(q, &self.seeds)?;
        if let Some(m) = &self.mixing {
            let mixed: Vec<TangentVec> = (0..m.nrows())
                .map(|a| {
                    let mut c = Vector::zeros(q.ambient_dim());
                    for (b, xb) in frame.horiz.iter().enumerate() {
                        c += xb.comps() * m[(a, b)];
                    }
                    TangentVec::from_parts(q.clone(), c)
                })
                .collect();
            frame.horiz = mixed;
        }
        Ok(frame)
    }

    /// The `k`-th frame vector as a field; `k = 2n` is the characteristic field.
    pub fn vector_field(&self, k: usize) -> VectorFieldOracle {
        let me = self.clone();
        let two_n = 2 * self.source.n();
        let label = if k == two_n { "T".to_string() } else { format!("X{}", k + 1) };
        VectorFieldOracle::new(label, move |q| {
            if k == two_n {
                me.source.check_point(q)?;
                return Ok(me.source.reeb(q));
            }
            let frame = me.at(q)?;
            frame
                .horiz
                .into_iter()
                .nth(k)
                .ok_or_else(|| GeomError::Config(format!("frame index {k} out of range")))
        })
    }

    pub fn fields(&self) -> Vec<VectorFieldOracle> {
        (0..=2 * self.source.n()).map(|k| self.vector_field(k)).collect()
    }
}

/// Torsion `A` and `Ω = dθ` of the pseudohermitian structure.
#[derive(Clone, Copy, Debug)]
pub struct PseudohermitianData {
    source: SourceSphere,
}

impl PseudohermitianData {
    /// `A(X, Y) = ½ (L_T g)(X, Y)` on horizontal vectors, evaluated with the
    /// finite-difference Levi-Civita connection.
    pub fn torsion(&self, p: &EmbeddedPoint, x: &Vector, y: &Vector, cfg: &FdConfig) -> Result<f64> {
        let src = self.source;
        let reeb = VectorFieldOracle::new("T", move |q| {
            src.check_point(q)?;
            Ok(src.reeb(q))
        });
        let dxt = src.covariant_derivative(p, x, &reeb, cfg)?;
        let dyt = src.covariant_derivative(p, y, &reeb, cfg)?;
        Ok(0.5 * (src.metric(p, dxt.comps(), y) + src.metric(p, x, dyt.comps())))
    }

    /// `dθ(X, Y)` from central differences of the ambient extension
    /// `θ_q(v) = (s / R) <v, i q>`.
    pub fn omega(&self, p: &EmbeddedPoint, x: &Vector, y: &Vector, cfg: &FdConfig) -> Result<f64> {
        let src = self.source;
        let theta_at = |q: &Vector, v: &Vector| src.reeb_scale * v.dot(&mul_i(q)) / src.radius;
        let d = |dir: &Vector, arg: &Vector| -> Result<f64> {
            let val = central_derivative(cfg.h1(), cfg.richardson(), |t| {
                let q = p.coords() + dir * t;
                Ok(Vector::from_element(1, theta_at(&q, arg)))
            })?;
            Ok(val[0])
        };
        Ok(d(x, y)? - d(y, x)?)
    }

    /// The constant `κ` in `dθ(X, J Y) = κ g(X, Y)`, averaged over the frame.
    pub fn compatibility_constant(&self, frame: &ContactFrame, cfg: &FdConfig) -> Result<f64> {
        let p = &frame.base;
        let mut sum = 0.0;
        for x in &frame.horiz {
            let jx = mul_i(x.comps());
            sum += self.omega(p, x.comps(), &jx, cfg)?;
        }
        Ok(sum / frame.horiz.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s3() -> SourceSphere {
        SourceSphere::round(1, 1.0).unwrap()
    }

    #[test]
    fn reeb_at_north_pole() {
        let src = s3();
        let p = src.point(Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0])).unwrap();
        let f = src.contact_frame_at(&p).unwrap();
        assert!((f.reeb.comps() - Vector::from_vec(vec![0.0, 1.0, 0.0, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn frames_are_orthonormal_and_j_closed() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for src in [s3(), SourceSphere::round(2, 0.7).unwrap(), SourceSphere::squashed(1, 0.6, 0.8).unwrap()] {
            for _ in 0..10 {
                let p = src.random_point(&mut rng).unwrap();
                let f = src.contact_frame_at(&p).unwrap();
                assert!(f.gram_deviation(&src) < 1e-10);
                assert!(f.j_square_deviation() < 1e-10);
                for x in &f.horiz {
                    assert!(src.theta(&p, x.comps()).abs() < 1e-10);
                }
                assert!((src.theta(&p, f.reeb.comps()) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn frame_off_sphere_is_domain_error() {
        let src = s3();
        let p = EmbeddedPoint::on_sphere(Vector::from_vec(vec![2.0, 0.0, 0.0, 0.0]), 2.0).unwrap();
        assert!(matches!(src.contact_frame_at(&p), Err(GeomError::Domain(_))));
    }

    #[test]
    fn reeb_field_is_geodesic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for src in [s3(), SourceSphere::squashed(1, 0.5, 0.6).unwrap()] {
            let ff = src.frame_field(&src.random_point(&mut rng).unwrap()).unwrap();
            let t = ff.vector_field(2);
            for _ in 0..5 {
                let p = src.random_point(&mut rng).unwrap();
                let d = src.levi_civita(&p, &t, &t, &FdConfig::default()).unwrap();
                assert!(d.norm() < 1e-6, "{}", d.norm());
            }
        }
    }

    #[test]
    fn kappa_matches_closed_form() {
        // dθ(X, iX) = 2 s / R for a unit horizontal X
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (r, s) in [(1.0, 1.0), (0.6, 1.0), (0.5, 0.8)] {
            let src = SourceSphere::squashed(1, r, s).unwrap();
            let p = src.random_point(&mut rng).unwrap();
            let f = src.contact_frame_at(&p).unwrap();
            let k = src.pseudohermitian().compatibility_constant(&f, &FdConfig::default()).unwrap();
            assert!((k - 2.0 * s / r).abs() < 1e-8, "{k}");
        }
    }

    #[test]
    fn tanaka_webster_rejects_vertical_argument() {
        let src = s3();
        let p = src.point(Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0])).unwrap();
        let ff = src.frame_field(&p).unwrap();
        let err = src.tanaka_webster_horizontal(&p, &ff.vector_field(2), &ff.vector_field(0), &FdConfig::default());
        assert!(matches!(err, Err(GeomError::Domain(_))));
    }
}

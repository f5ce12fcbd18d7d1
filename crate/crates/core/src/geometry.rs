//! Embedded points, tangent vectors and the finite-difference machinery shared
//! by every other module.
//!
//! Points are carried in ambient Euclidean coordinates. Complex coordinates are
//! interleaved as `(re z1, im z1, re z2, im z2, ...)`, so multiplication by `i`
//! maps each pair `(a, b)` to `(-b, a)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{GeomError, Result};

pub type Vector = DVector<f64>;

const POINT_TOL: f64 = 1e-12;
const TANGENT_TOL: f64 = 1e-10;

/// Which constraint an [`EmbeddedPoint`] satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum PointModel {
    /// Round sphere of the given radius centred at the origin.
    Sphere { radius: f64 },
    /// Unit representative in `C^k` of a point of complex projective space.
    Projective,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedPoint {
    coords: Vector,
    model: PointModel,
}

impl EmbeddedPoint {
    pub fn on_sphere(coords: Vector, radius: f64) -> Result<Self> {
        if !radius.is_finite() || radius <= 0.0 {
            return Err(GeomError::Domain(format!("sphere radius {radius} must be positive")));
        }
        let norm = coords.norm();
        if ((norm - radius) / radius).abs() > POINT_TOL {
            return Err(GeomError::Domain(format!(
                "point norm {norm:.15} is off the sphere of radius {radius}"
            )));
        }
        Ok(Self { coords, model: PointModel::Sphere { radius } })
    }

    pub fn projective(coords: Vector) -> Result<Self> {
        if !coords.len().is_multiple_of(2) {
            return Err(GeomError::Domain("projective representative needs complex coordinates".into()));
        }
        let norm = coords.norm();
        if (norm - 1.0).abs() > POINT_TOL {
            return Err(GeomError::Domain(format!("representative norm {norm:.15} is not 1")));
        }
        Ok(Self { coords, model: PointModel::Projective })
    }

    /// Radially rescales `v` onto the sphere of the given radius.
    pub fn sphere_from_ambient(v: &Vector, radius: f64) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(GeomError::Domain("cannot normalize a zero vector".into()));
        }
        Self::on_sphere(v * (radius / norm), radius)
    }

    pub fn projective_from_ambient(v: &Vector) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(GeomError::Domain("cannot normalize a zero vector".into()));
        }
        Self::projective(v / norm)
    }

    pub fn coords(&self) -> &Vector {
        &self.coords
    }

    pub fn model(&self) -> PointModel {
        self.model
    }

    pub fn ambient_dim(&self) -> usize {
        self.coords.len()
    }

    /// Moves to `p + v` and renormalizes back onto the model.
    pub fn retract(&self, v: &Vector) -> Result<EmbeddedPoint> {
        let moved = &self.coords + v;
        match self.model {
            PointModel::Sphere { radius } => Self::sphere_from_ambient(&moved, radius),
            PointModel::Projective => Self::projective_from_ambient(&moved),
        }
    }

    /// True when both points denote the same point of the model. Projective
    /// representatives that differ by a unit complex scalar are identified.
    pub fn same_point(&self, other: &EmbeddedPoint, tol: f64) -> bool {
        if self.model != other.model || self.coords.len() != other.coords.len() {
            return false;
        }
        match self.model {
            PointModel::Sphere { .. } => (&self.coords - &other.coords).norm() <= tol,
            PointModel::Projective => {
                let re = self.coords.dot(&other.coords);
                let im = self.coords.dot(&mul_i(&other.coords));
                (1.0 - (re * re + im * im).sqrt()).abs() <= tol
            }
        }
    }
}

impl fmt::Display for EmbeddedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.coords.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c:.6}")?;
        }
        write!(f, ")")
    }
}

/// Tangent vector stored by its ambient components.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVec {
    base: EmbeddedPoint,
    comps: Vector,
}

impl TangentVec {
    pub fn new(base: EmbeddedPoint, comps: Vector) -> Result<Self> {
        if comps.len() != base.ambient_dim() {
            return Err(GeomError::Domain(format!(
                "vector has {} components, base has {}",
                comps.len(),
                base.ambient_dim()
            )));
        }
        let scale = comps.norm() * base.coords.norm();
        let radial = comps.dot(&base.coords).abs();
        if radial > TANGENT_TOL * scale.max(f64::MIN_POSITIVE) && radial > 0.0 {
            return Err(GeomError::Domain(format!("vector is not tangent (radial part {radial:.3e})")));
        }
        if base.model == PointModel::Projective {
            let vertical = comps.dot(&mul_i(&base.coords)).abs();
            if vertical > TANGENT_TOL * comps.norm().max(f64::MIN_POSITIVE) && vertical > 0.0 {
                return Err(GeomError::Domain(format!(
                    "vector is not horizontal (vertical part {vertical:.3e})"
                )));
            }
        }
        Ok(Self { base, comps })
    }

    pub(crate) fn from_parts(base: EmbeddedPoint, comps: Vector) -> Self {
        Self { base, comps }
    }

    pub fn zero(base: &EmbeddedPoint) -> Self {
        Self { comps: Vector::zeros(base.ambient_dim()), base: base.clone() }
    }

    pub fn base(&self) -> &EmbeddedPoint {
        &self.base
    }

    pub fn comps(&self) -> &Vector {
        &self.comps
    }

    pub fn into_comps(self) -> Vector {
        self.comps
    }

    pub fn norm(&self) -> f64 {
        self.comps.norm()
    }

    pub fn scaled(&self, a: f64) -> TangentVec {
        Self { base: self.base.clone(), comps: &self.comps * a }
    }

    /// `a * self + b * other`; both vectors must share a base point.
    pub fn combine(&self, a: f64, other: &TangentVec, b: f64) -> Result<TangentVec> {
        ensure_same_base(&self.base, &other.base)?;
        Ok(Self { base: self.base.clone(), comps: &self.comps * a + &other.comps * b })
    }
}

pub(crate) fn ensure_same_base(a: &EmbeddedPoint, b: &EmbeddedPoint) -> Result<()> {
    if a.model != b.model || (&a.coords - &b.coords).norm() > 1e-12 * (1.0 + a.coords.norm()) {
        return Err(GeomError::Domain("vectors are based at different points".into()));
    }
    Ok(())
}

pub type FieldFn = dyn Fn(&EmbeddedPoint) -> Result<TangentVec> + Send + Sync;

/// A smooth tangent vector field given by an evaluator.
#[derive(Clone)]
pub struct VectorFieldOracle {
    label: String,
    eval: Arc<FieldFn>,
}

impl VectorFieldOracle {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&EmbeddedPoint) -> Result<TangentVec> + Send + Sync + 'static,
    {
        Self { label: label.into(), eval: Arc::new(f) }
    }

    pub fn eval(&self, p: &EmbeddedPoint) -> Result<TangentVec> {
        (self.eval)(p)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Extends a single tangent vector to a field by tangential projection of
    /// its constant ambient components.
    pub fn projected_constant(label: impl Into<String>, v: Vector) -> Self {
        Self::new(label, move |q| Ok(project_tangent(q, &v)))
    }
}

impl fmt::Debug for VectorFieldOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorFieldOracle").field("label", &self.label).finish()
    }
}

/// Finite-difference steps. `h1` drives first derivatives and the outer level
/// of nested derivatives, `h2` the inner level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FdConfig {
    h1: f64,
    h2: f64,
    richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { h1: 1e-4, h2: 1e-5, richardson: false }
    }
}

impl FdConfig {
    pub fn new(h1: f64, h2: f64, richardson: bool) -> Result<Self> {
        if !(h2 > 0.0 && h2 <= h1 && h1 < 1e-1) {
            return Err(GeomError::Config(format!("steps must satisfy 0 < h2 <= h1 < 0.1 (h1={h1}, h2={h2})")));
        }
        Ok(Self { h1, h2, richardson })
    }

    pub fn h1(&self) -> f64 {
        self.h1
    }

    pub fn h2(&self) -> f64 {
        self.h2
    }

    pub fn richardson(&self) -> bool {
        self.richardson
    }

    /// Configuration for the inner level of a nested derivative.
    pub fn inner(&self) -> FdConfig {
        Self { h1: self.h2, h2: self.h2, richardson: self.richardson }
    }
}

/// Central difference of `f` at `t = 0` with step `h`, optionally
/// Richardson-extrapolated to fourth order.
pub fn central_derivative<F>(h: f64, richardson: bool, mut f: F) -> Result<Vector>
where
    F: FnMut(f64) -> Result<Vector>,
{
    let mut diff = |s: f64| -> Result<Vector> {
        let plus = f(s)?;
        let minus = f(-s)?;
        Ok((plus - minus) / (2.0 * s))
    };
    if richardson {
        let coarse = diff(h)?;
        let fine = diff(0.5 * h)?;
        Ok((fine * 4.0 - coarse) / 3.0)
    } else {
        diff(h)
    }
}

pub(crate) fn check_step(h: f64, p: &EmbeddedPoint) -> Result<()> {
    let floor = 1e3 * f64::EPSILON * p.coords.norm().max(1.0);
    if h.is_nan() || h < floor {
        return Err(GeomError::Config(format!("step {h:.3e} underflows (floor {floor:.3e})")));
    }
    Ok(())
}

/// Derivative of `f` along the retraction curve `t -> retract(p + t dir)`.
pub fn derivative_along<F>(p: &EmbeddedPoint, dir: &Vector, h: f64, richardson: bool, mut f: F) -> Result<Vector>
where
    F: FnMut(&EmbeddedPoint) -> Result<Vector>,
{
    check_step(h, p)?;
    central_derivative(h, richardson, |t| {
        let q = p.retract(&(dir * t))?;
        f(&q)
    })
}

/// Ambient derivative of a vector field along `dir`, before any projection.
pub fn fd_directional(field: &VectorFieldOracle, p: &EmbeddedPoint, dir: &TangentVec, cfg: &FdConfig) -> Result<Vector> {
    ensure_same_base(p, dir.base())?;
    derivative_along(p, dir.comps(), cfg.h1, cfg.richardson, |q| Ok(field.eval(q)?.into_comps()))
}

/// Multiplication by `i` on interleaved complex coordinates.
pub fn mul_i(v: &Vector) -> Vector {
    let mut out = Vector::zeros(v.len());
    for k in 0..v.len() / 2 {
        out[2 * k] = -v[2 * k + 1];
        out[2 * k + 1] = v[2 * k];
    }
    out
}

/// Orthogonal projection of an ambient vector onto the tangent space of the
/// model at `p` (the horizontal space for projective representatives).
pub fn project_tangent(p: &EmbeddedPoint, v: &Vector) -> TangentVec {
    let x = p.coords();
    let mut out = v - x * (v.dot(x) / x.norm_squared());
    if p.model() == PointModel::Projective {
        let ix = mul_i(x);
        out -= &ix * (out.dot(&ix) / ix.norm_squared());
    }
    TangentVec::from_parts(p.clone(), out)
}

/// Modified Gram-Schmidt under an arbitrary metric, with one
/// reorthogonalization pass.
pub fn gram_schmidt<M>(vs: &[TangentVec], metric: M) -> Result<Vec<TangentVec>>
where
    M: Fn(&Vector, &Vector) -> f64,
{
    let Some(first) = vs.first() else { return Ok(Vec::new()) };
    let base = first.base().clone();
    let mut out: Vec<Vector> = Vec::with_capacity(vs.len());
    for (index, v) in vs.iter().enumerate() {
        ensure_same_base(&base, v.base())?;
        let mut w = v.comps().clone();
        for _ in 0..2 {
            for e in &out {
                let c = metric(&w, e);
                w -= e * c;
            }
        }
        let norm = metric(&w, &w).max(0.0).sqrt();
        if norm < 1e-10 {
            return Err(GeomError::DegenerateFrame { index, norm });
        }
        out.push(w / norm);
    }
    Ok(out.into_iter().map(|c| TangentVec::from_parts(base.clone(), c)).collect())
}

/// Euclidean metric on ambient components.
pub fn euclidean(u: &Vector, v: &Vector) -> f64 {
    u.dot(v)
}

/// Builds an orthonormal basis of a complex subspace, closed under
/// multiplication by `i`, from ambient coordinate axes.
///
/// `project` must be the orthogonal projector onto a subspace invariant under
/// `i`. With `seeds = None` the axes are picked greedily by largest residual
/// norm (ties to the lower index); the picks are returned so that nearby
/// points can reuse them and obtain a smoothly varying basis.
pub fn complex_frame<P>(len: usize, pairs: usize, seeds: Option<&[usize]>, project: P) -> Result<(Vec<Vector>, Vec<usize>)>
where
    P: Fn(&Vector) -> Vector,
{
    let residual = |k: usize, basis: &[Vector]| -> Vector {
        let mut w = project(&axis(len, k));
        for _ in 0..2 {
            for e in basis {
                let c = w.dot(e);
                w -= e * c;
            }
        }
        w
    };
    let mut basis: Vec<Vector> = Vec::with_capacity(2 * pairs);
    let mut used = Vec::with_capacity(pairs);
    for pair in 0..pairs {
        let (k, w) = match seeds {
            Some(s) => {
                let k = *s.get(pair).ok_or_else(|| GeomError::Config("too few frame seeds".into()))?;
                (k, residual(k, &basis))
            }
            None => {
                let mut best: Option<(usize, Vector)> = None;
                for k in (0..len).filter(|k| !used.contains(k)) {
                    let w = residual(k, &basis);
                    if best.as_ref().is_none_or(|(_, b)| w.norm() > b.norm()) {
                        best = Some((k, w));
                    }
                }
                best.ok_or_else(|| GeomError::Config("no seed axis available".into()))?
            }
        };
        let norm = w.norm();
        if norm < 1e-10 {
            return Err(GeomError::DegenerateFrame { index: 2 * pair, norm });
        }
        let x = w / norm;
        let jx = mul_i(&x);
        basis.push(x);
        basis.push(jx);
        used.push(k);
    }
    Ok((basis, used))
}

pub(crate) fn axis(len: usize, k: usize) -> Vector {
    let mut e = Vector::zeros(len);
    e[k] = 1.0;
    e
}

/// Uniformly distributed point on the sphere of radius `radius` in `R^len`.
pub fn random_sphere_point<R: Rng + ?Sized>(rng: &mut R, len: usize, radius: f64) -> Result<EmbeddedPoint> {
    loop {
        let v = Vector::from_iterator(len, (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)));
        if v.norm() > 1e-6 {
            return EmbeddedPoint::sphere_from_ambient(&v, radius);
        }
    }
}

/// Random tangent vector at `p` of unit Euclidean length.
pub fn random_tangent<R: Rng + ?Sized>(rng: &mut R, p: &EmbeddedPoint) -> TangentVec {
    loop {
        let v = Vector::from_iterator(p.ambient_dim(), (0..p.ambient_dim()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let t = project_tangent(p, &v);
        let n = t.norm();
        if n > 1e-6 {
            return t.scaled(1.0 / n);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s2(x: f64, y: f64, z: f64) -> EmbeddedPoint {
        EmbeddedPoint::on_sphere(Vector::from_vec(vec![x, y, z]), 1.0).unwrap()
    }

    #[test]
    fn rejects_points_off_the_sphere() {
        assert!(EmbeddedPoint::on_sphere(Vector::from_vec(vec![1.0, 1.0, 0.0]), 1.0).is_err());
        assert!(EmbeddedPoint::projective(Vector::from_vec(vec![1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn tangent_vec_checks_orthogonality() {
        let p = s2(0.0, 0.0, 1.0);
        assert!(TangentVec::new(p.clone(), Vector::from_vec(vec![1.0, 0.0, 0.0])).is_ok());
        assert!(TangentVec::new(p, Vector::from_vec(vec![1.0, 0.0, 0.1])).is_err());
        let z = EmbeddedPoint::projective(Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0])).unwrap();
        // i*z = (0,1,0,0) is vertical
        assert!(TangentVec::new(z, Vector::from_vec(vec![0.0, 1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn projective_points_identified_up_to_phase() {
        let a = EmbeddedPoint::projective(Vector::from_vec(vec![0.6, 0.0, 0.8, 0.0])).unwrap();
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let b = EmbeddedPoint::projective(Vector::from_vec(vec![0.6 * c, 0.6 * s, 0.8 * c, 0.8 * s])).unwrap();
        assert!(a.same_point(&b, 1e-12));
        let d = EmbeddedPoint::projective(Vector::from_vec(vec![0.8, 0.0, 0.6, 0.0])).unwrap();
        assert!(!a.same_point(&d, 1e-6));
    }

    #[test]
    fn constant_field_has_zero_derivative() {
        let field = VectorFieldOracle::new("const", |q: &EmbeddedPoint| {
            Ok(TangentVec::from_parts(q.clone(), Vector::from_vec(vec![0.3, -1.0, 2.0])))
        });
        let p = s2(0.6, 0.0, 0.8);
        let dir = TangentVec::new(p.clone(), Vector::from_vec(vec![0.0, 1.0, 0.0])).unwrap();
        let d = fd_directional(&field, &p, &dir, &FdConfig::default()).unwrap();
        assert!(d.norm() < 1e-10);
    }

    #[test]
    fn identity_field_derivative() {
        let field = VectorFieldOracle::new("id", |q: &EmbeddedPoint| Ok(TangentVec::from_parts(q.clone(), q.coords().clone())));
        let p = s2(1.0, 0.0, 0.0);
        let dir = TangentVec::new(p.clone(), Vector::from_vec(vec![0.0, 1.0, 0.0])).unwrap();
        let d = fd_directional(&field, &p, &dir, &FdConfig::default()).unwrap();
        assert!((d - Vector::from_vec(vec![0.0, 1.0, 0.0])).norm() < 1e-7);
    }

    #[test]
    fn underflowing_step_is_rejected() {
        let field = VectorFieldOracle::new("id", |q: &EmbeddedPoint| Ok(TangentVec::from_parts(q.clone(), q.coords().clone())));
        let p = s2(1.0, 0.0, 0.0);
        let dir = TangentVec::new(p.clone(), Vector::from_vec(vec![0.0, 1.0, 0.0])).unwrap();
        let cfg = FdConfig::new(1e-14, 1e-15, false).unwrap();
        assert!(matches!(fd_directional(&field, &p, &dir, &cfg), Err(GeomError::Config(_))));
    }

    #[test]
    fn fd_config_validation() {
        assert!(FdConfig::new(1e-4, 1e-3, false).is_err());
        assert!(FdConfig::new(0.2, 1e-3, false).is_err());
        assert!(FdConfig::new(1e-4, 0.0, false).is_err());
        assert!(FdConfig::new(1e-3, 1e-3, true).is_ok());
    }

    #[test]
    fn projection_examples() {
        let p = s2(0.0, 0.0, 1.0);
        assert!(project_tangent(&p, &Vector::from_vec(vec![0.0, 0.0, 5.0])).norm() < 1e-15);
        let v = Vector::from_vec(vec![1.0, 2.0, 0.0]);
        assert!((project_tangent(&p, &v).comps() - &v).norm() < 1e-14);
    }

    #[test]
    fn projection_orthogonal_to_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let p = random_sphere_point(&mut rng, 6, 1.3).unwrap();
            let v = Vector::from_iterator(6, (0..6).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let t = project_tangent(&p, &v);
            assert!(t.comps().dot(p.coords()).abs() < 1e-12);
            let z = EmbeddedPoint::projective_from_ambient(p.coords()).unwrap();
            let h = project_tangent(&z, &v);
            assert!(h.comps().dot(z.coords()).abs() < 1e-12);
            assert!(h.comps().dot(&mul_i(z.coords())).abs() < 1e-12);
        }
    }

    #[test]
    fn gram_schmidt_textbook_case() {
        let p = s2(0.0, 0.0, 1.0);
        let vs = vec![
            TangentVec::new(p.clone(), Vector::from_vec(vec![1.0, 0.0, 0.0])).unwrap(),
            TangentVec::new(p.clone(), Vector::from_vec(vec![1.0, 1.0, 0.0])).unwrap(),
        ];
        let out = gram_schmidt(&vs, euclidean).unwrap();
        assert!((out[0].comps() - Vector::from_vec(vec![1.0, 0.0, 0.0])).norm() < 1e-15);
        assert!((out[1].comps() - Vector::from_vec(vec![0.0, 1.0, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn gram_schmidt_reports_degenerate_index() {
        let p = s2(0.0, 0.0, 1.0);
        let vs = vec![
            TangentVec::new(p.clone(), Vector::from_vec(vec![1.0, 0.0, 0.0])).unwrap(),
            TangentVec::new(p.clone(), Vector::from_vec(vec![0.0, 1.0, 0.0])).unwrap(),
            TangentVec::new(p.clone(), Vector::from_vec(vec![2.0, -3.0, 0.0])).unwrap(),
        ];
        match gram_schmidt(&vs, euclidean) {
            Err(GeomError::DegenerateFrame { index, .. }) => assert_eq!(index, 2),
            other => panic!("expected degenerate frame, got {other:?}"),
        }
    }

    #[test]
    fn complex_frame_is_orthonormal_and_closed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_sphere_point(&mut rng, 6, 1.0).unwrap();
        let x = p.coords().clone();
        let ix = mul_i(&x);
        let proj = |v: &Vector| v - &x * v.dot(&x) - &ix * v.dot(&ix);
        let (basis, seeds) = complex_frame(6, 2, None, proj).unwrap();
        assert_eq!(seeds.len(), 2);
        for (a, u) in basis.iter().enumerate() {
            assert!(u.dot(&x).abs() < 1e-12 && u.dot(&ix).abs() < 1e-12);
            for (b, v) in basis.iter().enumerate() {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((u.dot(v) - want).abs() < 1e-12);
            }
        }
    }
}

//! Target spaces: the unit sphere `S^m(1)` and complex projective space with
//! its Fubini-Study metric of holomorphic sectional curvature `c`.
//!
//! Projective geometry is realized through the Hopf fibration
//! `S^{2k+1}(1) → CP^k(4)`: a point is a unit representative `z`, a tangent
//! vector is its horizontal lift (orthogonal to `z` and `i z`), the metric is
//! Euclidean on lifts and `J` is multiplication by `i`. Only `c = 4` has a
//! native connection; curvature formulas accept any `c > 0`.

use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::geometry::{
    complex_frame, derivative_along, ensure_same_base, mul_i, project_tangent, EmbeddedPoint, FdConfig, PointModel,
    TangentVec, Vector, VectorFieldOracle,
};

const HORIZONTAL_TOL: f64 = 1e-8;
const DRIFT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmbientModel {
    /// `S^dim(1) ⊂ R^{dim+1}`.
    Sphere { dim: usize },
    /// `CP^complex_dim(c)`, represented in `C^{complex_dim+1}`.
    ComplexProjective { complex_dim: usize, c: f64 },
}

impl AmbientModel {
    pub fn sphere(dim: usize) -> Result<Self> {
        if dim < 1 {
            return Err(GeomError::Domain("sphere dimension must be positive".into()));
        }
        Ok(Self::Sphere { dim })
    }

    pub fn complex_projective(complex_dim: usize, c: f64) -> Result<Self> {
        if complex_dim < 1 {
            return Err(GeomError::Domain("projective dimension must be positive".into()));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(GeomError::Domain(format!("holomorphic curvature {c} must be positive")));
        }
        Ok(Self::ComplexProjective { complex_dim, c })
    }

    /// Length of the ambient coordinate vector of a point.
    pub fn ambient_len(&self) -> usize {
        match *self {
            Self::Sphere { dim } => dim + 1,
            Self::ComplexProjective { complex_dim, .. } => 2 * (complex_dim + 1),
        }
    }

    /// Real dimension of the manifold.
    pub fn dim(&self) -> usize {
        match *self {
            Self::Sphere { dim } => dim,
            Self::ComplexProjective { complex_dim, .. } => 2 * complex_dim,
        }
    }

    pub fn point(&self, coords: Vector) -> Result<EmbeddedPoint> {
        if coords.len() != self.ambient_len() {
            return Err(GeomError::Domain(format!("expected {} coordinates", self.ambient_len())));
        }
        match self {
            Self::Sphere { .. } => EmbeddedPoint::on_sphere(coords, 1.0),
            Self::ComplexProjective { .. } => EmbeddedPoint::projective(coords),
        }
    }

    /// Normalizes an arbitrary nonzero ambient vector onto the model.
    pub fn point_from_ambient(&self, v: &Vector) -> Result<EmbeddedPoint> {
        match self {
            Self::Sphere { .. } => EmbeddedPoint::sphere_from_ambient(v, 1.0),
            Self::ComplexProjective { .. } => EmbeddedPoint::projective_from_ambient(v),
        }
    }

    pub fn check_point(&self, p: &EmbeddedPoint) -> Result<()> {
        let ok = p.ambient_dim() == self.ambient_len()
            && match (self, p.model()) {
                (Self::Sphere { .. }, PointModel::Sphere { radius }) => (radius - 1.0).abs() < 1e-12,
                (Self::ComplexProjective { .. }, PointModel::Projective) => true,
                _ => false,
            };
        if ok {
            Ok(())
        } else {
            Err(GeomError::Domain(format!("point {p} does not belong to {self:?}")))
        }
    }

    pub fn holomorphic_curvature(&self) -> Option<f64> {
        match *self {
            Self::Sphere { .. } => None,
            Self::ComplexProjective { c, .. } => Some(c),
        }
    }

    fn ensure_native(&self) -> Result<()> {
        match *self {
            Self::ComplexProjective { c, .. } if c != 4.0 => Err(GeomError::Capability(format!(
                "connection is only realized for c = 4 (got c = {c})"
            ))),
            _ => Ok(()),
        }
    }

    /// Projects an ambient vector onto the tangent (horizontal) space at `p`.
    pub fn tangent_projection(&self, p: &EmbeddedPoint, v: &Vector) -> TangentVec {
        project_tangent(p, v)
    }

    /// Covariant derivative of a section along a curve.
    ///
    /// `velocity` is the ambient velocity of the (lifted) curve at `p`,
    /// `value` the section there and `derivative` the ambient derivative of
    /// the section along the curve. For projective targets the curve may be
    /// any lift, not necessarily horizontal: the phase rotation of the lift is
    /// removed by the `-<c', i c> i V` term.
    pub fn covariant_along(&self, p: &EmbeddedPoint, velocity: &Vector, value: &Vector, derivative: &Vector) -> Result<Vector> {
        self.ensure_native()?;
        let mut out = project_tangent(p, derivative).into_comps();
        if let Self::ComplexProjective { .. } = self {
            let phase = velocity.dot(&mul_i(p.coords()));
            out -= mul_i(value) * phase;
        }
        Ok(out)
    }

    /// Curvature operator `R(X, Y)Z` by closed formula.
    pub fn curvature(&self, x: &TangentVec, y: &TangentVec, z: &TangentVec) -> Result<TangentVec> {
        self.check_point(x.base())?;
        match *self {
            Self::Sphere { .. } => sphere_curvature(x, y, z),
            Self::ComplexProjective { c, .. } => cp_curvature(x, y, z, c),
        }
    }

    /// The complex structure on tangent vectors (projective targets only).
    pub fn complex_structure(&self, v: &TangentVec) -> Result<TangentVec> {
        match self {
            Self::Sphere { .. } => Err(GeomError::Domain("sphere targets carry no complex structure".into())),
            Self::ComplexProjective { .. } => Ok(TangentVec::from_parts(v.base().clone(), mul_i(v.comps()))),
        }
    }
}

/// `R(X,Y)Z = h(Z,Y) X - h(Z,X) Y` on the unit sphere.
pub fn sphere_curvature(x: &TangentVec, y: &TangentVec, z: &TangentVec) -> Result<TangentVec> {
    ensure_same_base(x.base(), y.base())?;
    ensure_same_base(x.base(), z.base())?;
    match x.base().model() {
        PointModel::Sphere { radius } if (radius - 1.0).abs() < 1e-12 => {}
        _ => return Err(GeomError::Domain("sphere curvature needs a point of the unit sphere".into())),
    }
    let (xv, yv, zv) = (x.comps(), y.comps(), z.comps());
    let out = xv * zv.dot(yv) - yv * zv.dot(xv);
    Ok(TangentVec::from_parts(x.base().clone(), out))
}

fn ensure_horizontal(v: &TangentVec) -> Result<()> {
    let p = v.base().coords();
    let scale = v.norm().max(1.0);
    let radial = v.comps().dot(p).abs();
    let vertical = v.comps().dot(&mul_i(p)).abs();
    if radial > HORIZONTAL_TOL * scale || vertical > HORIZONTAL_TOL * scale {
        return Err(GeomError::Domain(format!(
            "vector is not a horizontal lift (radial {radial:.3e}, vertical {vertical:.3e})"
        )));
    }
    Ok(())
}

/// Fubini-Study curvature
/// `(c/4){h(Y,Z)X - h(X,Z)Y + h(JY,Z)JX - h(JX,Z)JY + 2h(X,JY)JZ}`.
pub fn cp_curvature(x: &TangentVec, y: &TangentVec, z: &TangentVec, c: f64) -> Result<TangentVec> {
    ensure_same_base(x.base(), y.base())?;
    ensure_same_base(x.base(), z.base())?;
    if x.base().model() != PointModel::Projective {
        return Err(GeomError::Domain("projective curvature needs a projective representative".into()));
    }
    for v in [x, y, z] {
        ensure_horizontal(v)?;
    }
    let (xv, yv, zv) = (x.comps(), y.comps(), z.comps());
    let (jx, jy, jz) = (mul_i(xv), mul_i(yv), mul_i(zv));
    let out = xv * yv.dot(zv) - yv * xv.dot(zv) + &jx * jy.dot(zv) - &jy * jx.dot(zv) + jz * (2.0 * xv.dot(&jy));
    Ok(TangentVec::from_parts(x.base().clone(), out * (c / 4.0)))
}

/// A unit representative together with an orthonormal basis of its
/// horizontal space, closed under `J`.
#[derive(Clone, Debug)]
pub struct HopfLift {
    pub rep: EmbeddedPoint,
    pub horiz_basis: Vec<TangentVec>,
}

impl HopfLift {
    pub fn at(rep: &EmbeddedPoint) -> Result<Self> {
        if rep.model() != PointModel::Projective {
            return Err(GeomError::Domain("Hopf lift needs a projective representative".into()));
        }
        let z = rep.coords().clone();
        let iz = mul_i(&z);
        let len = z.len();
        let project = |v: &Vector| v - &z * v.dot(&z) - &iz * v.dot(&iz);
        let (basis, _) = complex_frame(len, len / 2 - 1, None, project)?;
        let horiz_basis = basis.into_iter().map(|c| TangentVec::from_parts(rep.clone(), c)).collect();
        Ok(Self { rep: rep.clone(), horiz_basis })
    }
}

/// Fubini-Study derivative of the horizontal-lift field `y` along `x` at the
/// representative `p`, read through the Hopf submersion: the horizontal part
/// of the ambient derivative.
///
/// The fields must be horizontal lifts on the whole stencil; a vertical
/// component above the drift tolerance at any stencil point is reported as a
/// domain error.
pub fn hopf_horizontal_connection(
    p: &EmbeddedPoint,
    x: &VectorFieldOracle,
    y: &VectorFieldOracle,
    cfg: &FdConfig,
) -> Result<TangentVec> {
    if p.model() != PointModel::Projective {
        return Err(GeomError::Domain("connection needs a projective representative".into()));
    }
    let xp = x.eval(p)?;
    check_drift(p, xp.comps(), x.label())?;
    let d = derivative_along(p, xp.comps(), cfg.h1(), cfg.richardson(), |q| {
        let v = y.eval(q)?.into_comps();
        check_drift(q, &v, y.label())?;
        Ok(v)
    })?;
    Ok(project_tangent(p, &d))
}

fn check_drift(q: &EmbeddedPoint, v: &Vector, label: &str) -> Result<()> {
    let drift = v.dot(&mul_i(q.coords())).abs().max(v.dot(q.coords()).abs());
    if drift > DRIFT_TOL {
        return Err(GeomError::Domain(format!("field {label} is not a horizontal lift (drift {drift:.3e})")));
    }
    Ok(())
}

/// Circle-invariant horizontal field `q -> H_q(M q)` for a complex-linear `M`
/// given as a real matrix on interleaved coordinates.
pub fn basic_field(label: impl Into<String>, m: nalgebra::DMatrix<f64>) -> VectorFieldOracle {
    VectorFieldOracle::new(label, move |q| Ok(project_tangent(q, &(&m * q.coords()))))
}

/// Real matrix of the complex rank-one map `q -> a <q, b>_C` with
/// `<q, b>_C = Σ conj(b_k) q_k`, so that `b -> a |b|²`.
pub fn complex_outer(a: &Vector, b: &Vector) -> nalgebra::DMatrix<f64> {
    let n = a.len() / 2;
    let mut m = nalgebra::DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let (ar, ai) = (a[2 * j], a[2 * j + 1]);
            let (br, bi) = (b[2 * k], -b[2 * k + 1]);
            let (re, im) = (ar * br - ai * bi, ar * bi + ai * br);
            m[(2 * j, 2 * k)] = re;
            m[(2 * j, 2 * k + 1)] = -im;
            m[(2 * j + 1, 2 * k)] = im;
            m[(2 * j + 1, 2 * k + 1)] = re;
        }
    }
    m
}

/// Sectional curvature of the plane spanned by two basic fields at `p`,
/// computed from the Fubini-Study connection by nested differences.
pub fn fd_sectional_curvature(
    p: &EmbeddedPoint,
    x: &VectorFieldOracle,
    y: &VectorFieldOracle,
    cfg: &FdConfig,
) -> Result<f64> {
    let inner = cfg.inner();
    let nabla = |a: &VectorFieldOracle, b: &VectorFieldOracle| {
        let (a, b) = (a.clone(), b.clone());
        VectorFieldOracle::new("nabla", move |q| hopf_horizontal_connection(q, &a, &b, &inner))
    };
    let yy = nabla(y, y);
    let xy = nabla(x, y);
    let xyy = hopf_horizontal_connection(p, x, &yy, cfg)?;
    let yxy = hopf_horizontal_connection(p, y, &xy, cfg)?;
    let bracket = hopf_horizontal_connection(p, x, y, cfg)?.into_comps()
        - hopf_horizontal_connection(p, y, x, cfg)?.into_comps();
    let bracket_field = VectorFieldOracle::new("bracket", {
        let b = bracket.clone();
        move |q| Ok(project_tangent(q, &b))
    });
    let by = hopf_horizontal_connection(p, &bracket_field, y, cfg)?;
    let r = xyy.into_comps() - yxy.into_comps() - by.into_comps();
    let (xv, yv) = (x.eval(p)?.into_comps(), y.eval(p)?.into_comps());
    let area = xv.norm_squared() * yv.norm_squared() - xv.dot(&yv).powi(2);
    if area < 1e-12 {
        return Err(GeomError::DegenerateFrame { index: 1, norm: area.sqrt() });
    }
    Ok(r.dot(&xv) / area)
}

//! Quadrature of the pseudo energy and pseudo bienergy over the source sphere.
//!
//! Integrals are taken against the Riemannian volume of the source metric.
//! The product rule uses Hopf coordinates on `S³`,
//! `x = r (cos η e^{iξ₁}, sin η e^{iξ₂})` with volume density
//! `r³ sin η cos η`, Gauss-Legendre in `η` and trapezoids in `ξ₁, ξ₂`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cr::SourceSphere;
use crate::error::{GeomError, Result};
use crate::geometry::{random_sphere_point, EmbeddedPoint, FdConfig, Vector};
use crate::immersion::Immersion;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleKind {
    ProductHopf { polar: usize, azimuthal: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

/// Nodes on the unit sphere with weights for its round volume. Integration
/// rescales both to the source radius and Reeb scale.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    kind: RuleKind,
    sphere_len: usize,
    nodes: Vec<Vector>,
    weights: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    /// Standard error for Monte Carlo rules.
    pub std_error: Option<f64>,
}

/// Sum in a fixed pairwise tree order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// `Vol(S^{2n+1}(1)) = 2 π^{n+1} / n!`.
pub fn unit_sphere_volume(n: usize) -> f64 {
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    2.0 * PI.powi(n as i32 + 1) / fact
}

impl QuadratureRule {
    pub fn product_hopf(polar: usize, azimuthal: usize) -> Result<Self> {
        let polar_nz = NonZeroUsize::new(polar).ok_or_else(|| GeomError::Config("polar node count must be positive".into()))?;
        if azimuthal == 0 {
            return Err(GeomError::Config("azimuthal node count must be positive".into()));
        }
        let gl = GaussLegendre::new(polar_nz);
        let dxi = 2.0 * PI / azimuthal as f64;
        let mut nodes = Vec::with_capacity(polar * azimuthal * azimuthal);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for &(x, w) in gl.as_node_weight_pairs() {
            let eta = FRAC_PI_2 * 0.5 * (x + 1.0);
            let w_eta = w * FRAC_PI_2 * 0.5 * eta.sin() * eta.cos();
            for a in 0..azimuthal {
                let xi1 = a as f64 * dxi;
                for b in 0..azimuthal {
                    let xi2 = b as f64 * dxi;
                    nodes.push(Vector::from_vec(vec![
                        eta.cos() * xi1.cos(),
                        eta.cos() * xi1.sin(),
                        eta.sin() * xi2.cos(),
                        eta.sin() * xi2.sin(),
                    ]));
                    weights.push(w_eta * dxi * dxi);
                }
            }
        }
        Ok(Self { kind: RuleKind::ProductHopf { polar, azimuthal }, sphere_len: 4, nodes, weights })
    }

    /// Uniform samples on `S^{2n+1}(1)` with equal weights.
    pub fn monte_carlo(n: usize, samples: usize, seed: u64) -> Result<Self> {
        if samples < 2 {
            return Err(GeomError::Config("Monte Carlo needs at least two samples".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = 2 * n + 2;
        let nodes: Vec<Vector> = (0..samples)
            .map(|_| random_sphere_point(&mut rng, len, 1.0).map(|p| p.coords().clone()))
            .collect::<Result<_>>()?;
        let w = unit_sphere_volume(n) / samples as f64;
        Ok(Self { kind: RuleKind::MonteCarlo { samples, seed }, sphere_len: len, nodes, weights: vec![w; samples] })
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check_source(&self, source: &SourceSphere) -> Result<()> {
        if source.ambient_len() != self.sphere_len {
            return Err(GeomError::Config(format!(
                "rule lives on S^{} but the source is S^{}",
                self.sphere_len - 1,
                source.dim()
            )));
        }
        Ok(())
    }

    /// Total weight on `source`, its Riemannian volume up to quadrature error.
    pub fn volume(&self, source: &SourceSphere) -> Result<f64> {
        Ok(self.integrate(source, |_| Ok(1.0))?.value)
    }

    /// `∫ f dvol` over `source`. Nodes are evaluated in parallel and summed
    /// in a fixed order.
    pub fn integrate<F>(&self, source: &SourceSphere, f: F) -> Result<Integral>
    where
        F: Fn(&EmbeddedPoint) -> Result<f64> + Sync,
    {
        self.check_source(source)?;
        let scale = source.radius().powi(source.dim() as i32) * source.reeb_scale();
        let values: Vec<f64> = self
            .nodes
            .par_iter()
            .map(|x| {
                let p = EmbeddedPoint::sphere_from_ambient(&(x * source.radius()), source.radius())?;
                f(&p)
            })
            .collect::<Result<_>>()?;
        let terms: Vec<f64> = values.iter().zip(&self.weights).map(|(v, w)| v * w * scale).collect();
        let value = pairwise_sum(&terms);
        let std_error = match self.kind {
            RuleKind::ProductHopf { .. } => None,
            RuleKind::MonteCarlo { samples, .. } => {
                let k = samples as f64;
                let mean = value / k;
                let dev: Vec<f64> = terms.iter().map(|t| (t - mean).powi(2)).collect();
                Some((pairwise_sum(&dev) / (k - 1.0)).sqrt() * k.sqrt())
            }
        };
        Ok(Integral { value, std_error })
    }
}

/// `E_b = ½ ∫ Σ_i |dφ X_i|²` over a horizontal orthonormal frame.
pub fn pseudo_energy(im: &Immersion, rule: &QuadratureRule, cfg: &FdConfig) -> Result<Integral> {
    rule.integrate(im.source(), |p| {
        let frame = im.source().contact_frame_at(p)?;
        let mut sum = 0.0;
        for x in &frame.horiz {
            sum += im.pushforward(p, x.comps(), cfg)?.comps().norm_squared();
        }
        Ok(0.5 * sum)
    })
}

/// `E_{b,2} = ½ ∫ |τ_b|²`.
pub fn pseudo_bienergy(im: &Immersion, rule: &QuadratureRule, cfg: &FdConfig) -> Result<Integral> {
    rule.integrate(im.source(), |p| Ok(0.5 * im.pseudo_tension(p, cfg)?.normal.norm_squared()))
}

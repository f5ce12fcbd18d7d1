use std::f64::consts::{FRAC_1_SQRT_2, PI};

use pseudobiharmonic::ambient::AmbientModel;
use pseudobiharmonic::catalog::{build_immersion, Family, FamilySpec};
use pseudobiharmonic::cr::SourceSphere;
use pseudobiharmonic::energy::*;
use pseudobiharmonic::geometry::*;
use pseudobiharmonic::immersion::{Immersion, StepLadder};

fn sphere(r: f64) -> Immersion {
    build_immersion(&FamilySpec::new(Family::SmallSphere, 1, r).unwrap()).unwrap()
}

fn rule() -> QuadratureRule {
    QuadratureRule::product_hopf(12, 12).unwrap()
}

fn cfg() -> FdConfig {
    StepLadder::default().first
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn pseudo_energy_of_small_spheres() {
    // isometric on the horizontal distribution: energy density n, here 1
    for r in [0.5, FRAC_1_SQRT_2, 0.9] {
        let e = pseudo_energy(&sphere(r), &rule(), &cfg()).unwrap().value;
        let want = 2.0 * PI * PI * r.powi(3);
        assert!(rel(e, want) < 1e-4, "r = {r}: {e} vs {want}");
    }
}

#[test]
fn pseudo_energy_of_takagi_uses_berger_volume() {
    let u = 0.6f64;
    let im = build_immersion(&FamilySpec::new(Family::TakagiA1, 1, u).unwrap()).unwrap();
    let e = pseudo_energy(&im, &rule(), &cfg()).unwrap().value;
    let want = 2.0 * PI * PI * u.sin().powi(3) * u.cos();
    assert!(rel(e, want) < 1e-4, "{e} vs {want}");
}

#[test]
fn pseudo_bienergy_of_small_spheres() {
    for r in [0.5, FRAC_1_SQRT_2, 0.9] {
        let lambda = (1.0 - r * r).sqrt() / r;
        let e = pseudo_bienergy(&sphere(r), &rule(), &cfg()).unwrap().value;
        let want = 0.5 * (2.0 * lambda).powi(2) * 2.0 * PI * PI * r.powi(3);
        assert!(rel(e, want) < 1e-3, "r = {r}: {e} vs {want}");
    }
}

#[test]
fn equator_has_no_bienergy() {
    assert!(pseudo_bienergy(&sphere(1.0), &rule(), &cfg()).unwrap().value < 1e-8);
}

#[test]
fn bienergy_peaks_at_inverse_sqrt_three() {
    // 4π² r (1 - r²) rises up to r = 1/√3 and falls after it
    let e = |r: f64| pseudo_bienergy(&sphere(r), &rule(), &cfg()).unwrap().value;
    let peak = 1.0 / 3f64.sqrt();
    let rising: Vec<f64> = [0.31, 0.4, 0.5, peak - 0.02].map(e).to_vec();
    let falling: Vec<f64> = [peak + 0.02, 0.65, FRAC_1_SQRT_2, 0.85, 0.95, 0.99].map(e).to_vec();
    assert!(rising.windows(2).all(|w| w[1] > w[0]), "{rising:?}");
    assert!(falling.windows(2).all(|w| w[1] < w[0]), "{falling:?}");
    assert!(e(peak) > rising[3].max(falling[0]));
}

#[test]
fn monte_carlo_agrees_with_product_rule() {
    let im = sphere(0.6);
    let exact = pseudo_bienergy(&im, &rule(), &cfg()).unwrap().value;
    let mc = pseudo_bienergy(&im, &QuadratureRule::monte_carlo(1, 400, 3).unwrap(), &cfg()).unwrap();
    let se = mc.std_error.unwrap();
    // the integrand is constant, so the standard error collapses
    assert!((mc.value - exact).abs() <= 3.0 * se + 1e-6 * exact, "{} vs {exact} (se {se})", mc.value);

    let src = SourceSphere::round(1, 0.8).unwrap();
    let f = |q: &EmbeddedPoint| Ok(q.coords()[0].powi(2) + q.coords()[1] * q.coords()[2]);
    let exact = rule().integrate(&src, f).unwrap().value;
    let mc = QuadratureRule::monte_carlo(1, 4000, 5).unwrap().integrate(&src, f).unwrap();
    let se = mc.std_error.unwrap();
    assert!(se > 0.0);
    assert!((mc.value - exact).abs() <= 3.0 * se, "{} vs {exact} (se {se})", mc.value);
}

#[test]
fn integrals_are_reproducible() {
    let im = sphere(0.6);
    let mc = QuadratureRule::monte_carlo(1, 200, 9).unwrap();
    let a = pseudo_bienergy(&im, &mc, &cfg()).unwrap();
    let b = pseudo_bienergy(&im, &mc, &cfg()).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
}

#[test]
fn constant_map_has_zero_energy() {
    let src = SourceSphere::round(1, 0.7).unwrap();
    let im = Immersion::new("const", src, AmbientModel::sphere(4).unwrap(), |_| {
        EmbeddedPoint::on_sphere(Vector::from_vec(vec![0.0, 0.0, 0.0, 0.0, 1.0]), 1.0)
    });
    assert!(pseudo_energy(&im, &rule(), &cfg()).unwrap().value.abs() < 1e-12);
}

#[test]
fn rule_rejects_mismatched_source() {
    let src = SourceSphere::round(2, 1.0).unwrap();
    assert!(rule().volume(&src).is_err());
    let vol = QuadratureRule::monte_carlo(2, 100, 1).unwrap().volume(&src).unwrap();
    assert!(rel(vol, unit_sphere_volume(2)) < 1e-12);
    assert!((unit_sphere_volume(1) - 2.0 * PI * PI).abs() < 1e-12);
}

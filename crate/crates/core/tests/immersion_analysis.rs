use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pseudobiharmonic::ambient::AmbientModel;
use pseudobiharmonic::biharmonic::complex_pairings;
use pseudobiharmonic::catalog::{build_immersion, Family, FamilySpec};
use pseudobiharmonic::cr::SourceSphere;
use pseudobiharmonic::error::GeomError;
use pseudobiharmonic::geometry::*;
use pseudobiharmonic::immersion::{Immersion, StepLadder};

fn sphere(r: f64) -> Immersion {
    build_immersion(&FamilySpec::new(Family::SmallSphere, 1, r).unwrap()).unwrap()
}

fn takagi(u: f64) -> Immersion {
    build_immersion(&FamilySpec::new(Family::TakagiA1, 1, u).unwrap()).unwrap()
}

fn cfg() -> FdConfig {
    StepLadder::default().first
}

fn umbilic(r: f64) -> f64 {
    (1.0 - r * r).sqrt() / r
}

/// `S³(r) → S⁴(1)` with the height perturbed by `eps·x₀x₂`: neither
/// admissible nor with parallel mean curvature.
fn graph_perturbed(r: f64, eps: f64) -> Immersion {
    let src = SourceSphere::round(1, r).unwrap();
    let h = (1.0 - r * r).sqrt();
    Immersion::new("graph", src, AmbientModel::sphere(4).unwrap(), move |p| {
        let c = p.coords();
        let v = Vector::from_vec(vec![c[0], c[1], c[2], c[3], h + eps * c[0] * c[2]]);
        EmbeddedPoint::sphere_from_ambient(&v, 1.0)
    })
    .non_isometric()
}

#[test]
fn identity_immersion_pushes_forward_identically() {
    let src = SourceSphere::round(1, 1.0).unwrap();
    let im = Immersion::new("id", src, AmbientModel::sphere(3).unwrap(), |p| Ok(p.clone()));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let p = src.random_point(&mut rng).unwrap();
        let v = random_tangent(&mut rng, &p);
        let d = im.pushforward(&p, v.comps(), &cfg()).unwrap();
        assert!((d.comps() - v.comps()).norm() < 1e-8);
    }
}

#[test]
fn pushforward_is_linear_and_isometric() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for im in [sphere(0.6), sphere(0.9), takagi(0.5), takagi(1.1)] {
        let src = *im.source();
        for _ in 0..20 {
            let p = src.random_point(&mut rng).unwrap();
            assert!(im.isometry_defect(&p, &cfg()).unwrap() < 1e-8);
        }
        let p = src.random_point(&mut rng).unwrap();
        let (v, w) = (random_tangent(&mut rng, &p), random_tangent(&mut rng, &p));
        let combo = v.comps() * 0.7 - w.comps() * 1.3;
        let lhs = im.pushforward(&p, &combo, &cfg()).unwrap().into_comps();
        let rhs = im.pushforward(&p, v.comps(), &cfg()).unwrap().into_comps() * 0.7
            - im.pushforward(&p, w.comps(), &cfg()).unwrap().into_comps() * 1.3;
        assert!((lhs - rhs).norm() < 1e-8);
        // dφ(T) has unit length
        let t = im.pushforward(&p, src.reeb(&p).comps(), &cfg()).unwrap();
        assert!((t.norm() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn equator_is_totally_geodesic() {
    let im = sphere(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let p = im.source().random_point(&mut rng).unwrap();
        let table = im.form_table(&p, &cfg()).unwrap();
        assert!(table.norm_sq_full().sqrt() < 1e-6);
        assert!(im.pseudo_tension(&p, &cfg()).unwrap().normal.norm() < 1e-6);
        assert!(im.full_tension(&p, &cfg()).unwrap().normal.norm() < 1e-6);
    }
}

#[test]
fn small_sphere_form_is_umbilic() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for r in [0.6, FRAC_1_SQRT_2, 0.9] {
        let im = sphere(r);
        let lambda = umbilic(r);
        for _ in 0..10 {
            let p = im.source().random_point(&mut rng).unwrap();
            let x = random_tangent(&mut rng, &p);
            let x = im.source().horizontal_part(&p, x.comps());
            let x = x.scaled(1.0 / im.source().norm(&p, x.comps()));
            let field = VectorFieldOracle::projected_constant("X", x.comps().clone());
            let b = im.second_fundamental_form(&p, &field, &field, &cfg()).unwrap();
            assert!((b.normal.norm() - lambda).abs() < 1e-6, "{} vs {lambda}", b.normal.norm());
        }
        let p = im.source().random_point(&mut rng).unwrap();
        let spec = im.shape_spectrum(&p, &cfg()).unwrap();
        for e in &spec.eigenvalues {
            assert!((e - lambda).abs() < 1e-5);
        }
    }
}

#[test]
fn small_sphere_tension_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for r in [0.5, 0.6, 0.9] {
        let im = sphere(r);
        let lambda = umbilic(r);
        for _ in 0..3 {
            let p = im.source().random_point(&mut rng).unwrap();
            let tau_b = im.pseudo_tension(&p, &cfg()).unwrap();
            let tau = im.full_tension(&p, &cfg()).unwrap();
            assert!((tau_b.normal.norm() - 2.0 * lambda).abs() < 1e-5);
            assert!((tau.normal.norm() - 3.0 * lambda).abs() < 1e-5);
            let table = im.form_table(&p, &cfg()).unwrap();
            assert!((&tau.normal - &tau_b.normal - table.reeb_entry()).norm() < 1e-6);
            // admissible cross terms vanish, so the norm splits
            let split = table.norm_sq_horizontal() + table.reeb_entry().norm_squared();
            assert!((table.norm_sq_full() - split).abs() < 1e-6);
        }
    }
}

#[test]
fn tension_is_frame_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for im in [sphere(0.6), takagi(0.7)] {
        let p = im.source().random_point(&mut rng).unwrap();
        let field = im.source().frame_field(&p).unwrap();
        let (c, s) = (1.1f64.cos(), 1.1f64.sin());
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let mixed = field.clone().with_mixing(rot).unwrap();
        let a = im.pseudo_tension_with(&p, &field, &cfg()).unwrap().normal;
        let b = im.pseudo_tension_with(&p, &mixed, &cfg()).unwrap().normal;
        assert!((a - b).norm() < 1e-8);
        let ta = im.form_table_with(&p, &field, &cfg()).unwrap();
        let tb = im.form_table_with(&p, &mixed, &cfg()).unwrap();
        let sa = im.spectrum_from(&p, &ta).unwrap();
        let sb = im.spectrum_from(&p, &tb).unwrap();
        for (x, y) in sa.eigenvalues.iter().zip(&sb.eigenvalues) {
            assert!((x - y).abs() < 1e-8);
        }
    }
}

#[test]
fn takagi_principal_curvatures() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for u in [0.4, FRAC_PI_4, 1.0, 1.3] {
        let im = takagi(u);
        let cot = 1.0 / u.tan();
        let mut want = vec![cot, cot, 2.0 / (2.0 * u).tan()];
        want.sort_by(f64::total_cmp);
        for _ in 0..3 {
            let p = im.source().random_point(&mut rng).unwrap();
            let spec = im.shape_spectrum(&p, &cfg()).unwrap();
            for (got, w) in spec.eigenvalues.iter().zip(&want) {
                assert!((got - w).abs() < 1e-5, "u={u}: {:?} vs {want:?}", spec.eigenvalues);
            }
            // T is the principal direction of 2 cot 2u
            assert!((spec.reeb_eigenvalue - 2.0 / (2.0 * u).tan()).abs() < 1e-5);
        }
    }
}

#[test]
fn takagi_mean_curvature_and_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 1.0;
    for u in [0.35, 0.6, 1.2] {
        let im = takagi(u);
        let p = im.source().random_point(&mut rng).unwrap();
        let xi = im.unit_normal(&p).unwrap();
        let tau = im.full_tension(&p, &cfg()).unwrap().normal;
        let mean = tau.dot(&xi) / (2.0 * n + 1.0);
        let want = ((2.0 * n + 1.0) / u.tan() - u.tan()) / (2.0 * n + 1.0);
        assert!((mean - want).abs() < 1e-6);
        let table = im.form_table(&p, &cfg()).unwrap();
        let norm = u.tan().powi(2) + (2.0 * n + 1.0) / u.tan().powi(2) - 2.0;
        assert!((table.norm_sq_full() - norm).abs() < 1e-5);
        // horizontal part by the normal-case count
        assert!((table.norm_sq_horizontal() - 2.0 * n / u.tan().powi(2)).abs() < 1e-4);
    }
}

#[test]
fn b_norm_horizontal_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p = sphere(FRAC_1_SQRT_2).source().random_point(&mut rng).unwrap();
    assert!((sphere(FRAC_1_SQRT_2).b_norm_horizontal(&p, &cfg()).unwrap() - 2.0).abs() < 1e-4);
    let p = sphere(0.6).source().random_point(&mut rng).unwrap();
    assert!((sphere(0.6).b_norm_horizontal(&p, &cfg()).unwrap() - 32.0 / 9.0).abs() < 1e-4);
}

#[test]
fn admissibility_and_parallelism() {
    let ladder = StepLadder::default();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for (im, adm) in [(sphere(0.6), 1e-6), (sphere(0.9), 1e-6), (takagi(0.5), 1e-5), (takagi(FRAC_PI_4), 1e-5)] {
        let p = im.source().random_point(&mut rng).unwrap();
        assert!(im.admissibility_defect(&p, &ladder.first).unwrap() < adm);
        assert!(im.mean_curvature_parallelism_defect(&p, &ladder).unwrap() < 1e-4);
    }
    let broken = graph_perturbed(0.6, 1.0);
    let p = broken.source().random_point(&mut rng).unwrap();
    assert!(broken.admissibility_defect(&p, &ladder.first).unwrap() > 1e-2);
    assert!(broken.mean_curvature_parallelism_defect(&p, &ladder).unwrap() > 1e-2);
}

#[test]
fn takagi_complex_pairings_are_normal_case() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for u in [0.5, FRAC_PI_4, 1.2] {
        let im = takagi(u);
        let p = im.source().random_point(&mut rng).unwrap();
        let c = complex_pairings(&im, &p, &cfg()).unwrap();
        assert!(c.normal_self.abs() < 1e-12);
        assert!(c.reeb_tangential < 1e-6);
        assert!((c.reeb_normal.abs() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn non_isometric_map_trips_the_consistency_guard() {
    let src = SourceSphere::round(1, 0.6).unwrap();
    let im = Immersion::new("squeezed", src, AmbientModel::sphere(4).unwrap(), |p| {
        let c = p.coords();
        EmbeddedPoint::sphere_from_ambient(&Vector::from_vec(vec![c[0] * 1.3, c[1], c[2], c[3], 0.8]), 1.0)
    });
    let p = src.random_point(&mut ChaCha8Rng::seed_from_u64(13)).unwrap();
    assert!(matches!(im.form_table(&p, &cfg()), Err(GeomError::Consistency(_))));
}

#[test]
fn missing_normal_is_unsupported_codimension() {
    let im = graph_perturbed(0.6, 0.0);
    let p = im.source().random_point(&mut ChaCha8Rng::seed_from_u64(12)).unwrap();
    assert!(matches!(im.unit_normal(&p), Err(GeomError::UnsupportedCodimension(1))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn form_is_symmetric_and_normal(seed in any::<u64>(), r in 0.3f64..0.99, u in 0.25f64..1.35) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for im in [sphere(r), takagi(u)] {
            let p = im.source().random_point(&mut rng).unwrap();
            let table = im.form_table(&p, &cfg()).unwrap();
            prop_assert!(table.max_asymmetry < 1e-6);
            prop_assert!(table.max_tangential < 1e-6);
            let tau = im.full_tension(&p, &cfg()).unwrap().normal;
            let tau_b = im.pseudo_tension(&p, &cfg()).unwrap().normal;
            prop_assert!((tau - tau_b - table.reeb_entry()).norm() < 1e-6);
        }
    }
}

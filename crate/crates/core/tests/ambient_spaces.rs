use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pseudobiharmonic::ambient::*;
use pseudobiharmonic::error::GeomError;
use pseudobiharmonic::geometry::*;

fn lift(seed: u64, len: usize) -> (HopfLift, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_sphere_point(&mut rng, len, 1.0).unwrap();
    (HopfLift::at(&EmbeddedPoint::projective(p.coords().clone()).unwrap()).unwrap(), rng)
}

/// Random horizontal vector at a lift.
fn horizontal(l: &HopfLift, rng: &mut ChaCha8Rng) -> TangentVec {
    let t = random_tangent(rng, &l.rep);
    let z = l.rep.coords();
    let iz = mul_i(z);
    let c = t.comps() - &iz * t.comps().dot(&iz);
    TangentVec::new(l.rep.clone(), c).unwrap()
}

fn sphere_point(seed: u64) -> (EmbeddedPoint, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (random_sphere_point(&mut rng, 5, 1.0).unwrap(), rng)
}

#[test]
fn sphere_curvature_substitutions() {
    let (p, mut rng) = sphere_point(1);
    let v = gram_schmidt(&[random_tangent(&mut rng, &p), random_tangent(&mut rng, &p)], euclidean).unwrap();
    let (x, y) = (&v[0], &v[1]);
    assert!((sphere_curvature(x, y, y).unwrap().comps() - x.comps()).amax() < 1e-15);
    assert!((sphere_curvature(x, y, x).unwrap().comps() + y.comps()).amax() < 1e-15);
}

#[test]
fn curvature_operators_are_antisymmetric_and_satisfy_bianchi() {
    for seed in 0..10 {
        let (p, mut rng) = sphere_point(seed);
        let (x, y, z) = (random_tangent(&mut rng, &p), random_tangent(&mut rng, &p), random_tangent(&mut rng, &p));
        let a = sphere_curvature(&x, &y, &z).unwrap().into_comps();
        let b = sphere_curvature(&y, &x, &z).unwrap().into_comps();
        assert_eq!(a, -b);
        let bianchi = sphere_curvature(&x, &y, &z).unwrap().into_comps()
            + sphere_curvature(&y, &z, &x).unwrap().into_comps()
            + sphere_curvature(&z, &x, &y).unwrap().into_comps();
        assert!(bianchi.amax() < 1e-14);

        let (l, mut rng) = lift(seed, 6);
        let (x, y, z) = (horizontal(&l, &mut rng), horizontal(&l, &mut rng), horizontal(&l, &mut rng));
        let a = cp_curvature(&x, &y, &z, 4.0).unwrap().into_comps();
        let b = cp_curvature(&y, &x, &z, 4.0).unwrap().into_comps();
        assert!((a + b).amax() < 1e-14);
        let bianchi = cp_curvature(&x, &y, &z, 4.0).unwrap().into_comps()
            + cp_curvature(&y, &z, &x, 4.0).unwrap().into_comps()
            + cp_curvature(&z, &x, &y, 4.0).unwrap().into_comps();
        assert!(bianchi.amax() < 1e-13);
    }
}

#[test]
fn cp_curvature_pair_symmetry() {
    for seed in 0..10 {
        let (l, mut rng) = lift(100 + seed, 8);
        let v: Vec<TangentVec> = (0..4).map(|_| horizontal(&l, &mut rng)).collect();
        let lhs = cp_curvature(&v[0], &v[1], &v[2], 4.0).unwrap().comps().dot(v[3].comps());
        let rhs = cp_curvature(&v[2], &v[3], &v[0], 4.0).unwrap().comps().dot(v[1].comps());
        assert!((lhs - rhs).abs() < 1e-12);
    }
}

#[test]
fn cp_holomorphic_and_totally_real_values_for_any_c() {
    let (l, _) = lift(7, 6);
    for c in [1.0, 2.5, 4.0] {
        let x = &l.horiz_basis[0];
        let jx = TangentVec::new(l.rep.clone(), mul_i(x.comps())).unwrap();
        assert!((cp_curvature(x, &jx, &jx, c).unwrap().comps() - x.comps() * c).amax() < 1e-12);
        let y = &l.horiz_basis[2];
        assert!((cp_curvature(x, y, y, c).unwrap().comps() - x.comps() * (c / 4.0)).amax() < 1e-12);
    }
}

#[test]
fn hopf_connection_is_metric_compatible_and_kahler() {
    let cfg = FdConfig::new(1e-3, 1e-4, true).unwrap();
    for seed in 0..5 {
        let (l, mut rng) = lift(200 + seed, 6);
        let z = l.rep.coords().clone();
        let vs: Vec<Vector> = (0..3).map(|_| horizontal(&l, &mut rng).into_comps()).collect();
        let fx = basic_field("X", complex_outer(&vs[0], &z));
        let fy = basic_field("Y", complex_outer(&vs[1], &z));
        let fz = basic_field("Z", complex_outer(&vs[2], &z));
        let fjy = basic_field("JY", complex_outer(&mul_i(&vs[1]), &z));

        let lhs = derivative_along(&l.rep, &vs[0], 1e-3, true, |q| {
            Ok(Vector::from_element(1, fy.eval(q)?.comps().dot(fz.eval(q)?.comps())))
        })
        .unwrap()[0];
        let dy = hopf_horizontal_connection(&l.rep, &fx, &fy, &cfg).unwrap();
        let dz = hopf_horizontal_connection(&l.rep, &fx, &fz, &cfg).unwrap();
        let rhs = dy.comps().dot(&vs[2]) + vs[1].dot(dz.comps());
        assert!((lhs - rhs).abs() < 1e-6);

        let djy = hopf_horizontal_connection(&l.rep, &fx, &fjy, &cfg).unwrap();
        assert!((djy.comps() - mul_i(dy.comps())).norm() < 1e-6);
    }
}

#[test]
fn fd_sectional_curvature_matches_formula_on_random_planes() {
    let cfg = FdConfig::new(1e-3, 1e-3, true).unwrap();
    for seed in 0..10 {
        let (l, mut rng) = lift(300 + seed, 6);
        let z = l.rep.coords().clone();
        let x = horizontal(&l, &mut rng);
        let y = horizontal(&l, &mut rng);
        let area = x.comps().norm_squared() * y.comps().norm_squared() - x.comps().dot(y.comps()).powi(2);
        let exact = cp_curvature(&x, &y, &y, 4.0).unwrap().comps().dot(x.comps()) / area;
        let fx = basic_field("X", complex_outer(x.comps(), &z));
        let fy = basic_field("Y", complex_outer(y.comps(), &z));
        let fd = fd_sectional_curvature(&l.rep, &fx, &fy, &cfg).unwrap();
        assert!(((fd - exact) / exact).abs() < 2e-2, "{fd} vs {exact}");
        assert!((1.0 - 1e-9..=4.0 + 1e-9).contains(&exact));
    }
}

#[test]
fn ambient_models_validate_and_describe_themselves() {
    assert!(matches!(AmbientModel::sphere(0), Err(GeomError::Domain(_))));
    let cp = AmbientModel::complex_projective(2, 4.0).unwrap();
    assert_eq!(cp.dim(), 4);
    assert_eq!(cp.ambient_len(), 6);
    assert_eq!(cp.holomorphic_curvature(), Some(4.0));
    assert_eq!(AmbientModel::sphere(4).unwrap().holomorphic_curvature(), None);
}

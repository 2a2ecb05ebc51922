use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sflab::error::Error;
use sflab::geometry::*;
use sflab::oracle::{fd_directional, nearest_on_sphere_mesh, OracleConfig};

fn random_point(rng: &mut ChaCha8Rng, p: usize, lo: f64, hi: f64) -> Vec<f64> {
    loop {
        let q: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > lo && n < hi {
            return q;
        }
    }
}

#[test]
fn sphere_projection_matches_mesh_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..60 {
        let q = random_point(&mut rng, 3, 0.3, 1.5);
        let got = project(&Sphere2, &AmbientPoint::new(q.clone())).unwrap();
        let want = nearest_on_sphere_mesh(&q);
        for c in 0..3 {
            assert!((got.coords[c] - want[c]).abs() < 1e-7, "{q:?}");
        }
    }
}

#[test]
fn d_pi_matches_differenced_projection() {
    let cfg = OracleConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for m in [target_by_name("s2").unwrap(), target_by_name("torus").unwrap()] {
        let p = m.ambient_dim();
        let mut n = 0;
        while n < 50 {
            let q = random_point(&mut rng, p, 0.5, 1.5);
            if !m.in_tube(&q) {
                continue;
            }
            n += 1;
            let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let l = d_pi(m.as_ref(), &AmbientPoint::new(q.clone())).unwrap();
            let fd = fd_directional(
                &cfg,
                |y| {
                    let mut o = vec![0.0; p];
                    m.project_into(y, &mut o);
                    o
                },
                &q,
                &x,
            );
            let got = l.apply(&x);
            for c in 0..p {
                assert!((got[c] - fd[c]).abs() < 1e-8, "{} at {q:?}", m.name());
            }
        }
    }
}

#[test]
fn rejections() {
    let s = Sphere2;
    assert!(matches!(
        project(&s, &AmbientPoint::new(vec![0.0, 0.0, 0.0])),
        Err(Error::OutsideTubularNeighborhood { .. })
    ));
    assert!(matches!(
        project(&s, &AmbientPoint::new(vec![1.0, 0.0])),
        Err(Error::Shape(_))
    ));
    assert!(matches!(
        project(&s, &AmbientPoint::new(vec![f64::NAN, 0.0, 1.0])),
        Err(Error::NonFinite)
    ));
    let q = AmbientPoint::new(vec![0.0, 0.0, 1.0]);
    let normal = TangentVector {
        base: q.clone(),
        vec: vec![0.0, 0.0, 1.0],
    };
    assert!(matches!(j_apply(&s, &q, &normal), Err(Error::NotTangent(_))));
    assert!(target_by_name("klein").is_none());
}

#[test]
fn sphere_curvature_is_one() {
    // R(x, y)y = |y|²x − ⟨x, y⟩y on the unit sphere
    let q = AmbientPoint::new(vec![0.0, 0.0, 1.0]);
    let (x, y) = ([1.0, 0.0, 0.0], [0.0, 2.0, 0.0]);
    let r = curvature(&Sphere2, &q, &x, &y, &y).unwrap();
    assert!((r[0] - 4.0).abs() < 1e-14 && r[1].abs() < 1e-14 && r[2].abs() < 1e-14);
}

proptest! {
    #[test]
    fn projection_is_idempotent_and_radial(x in -2.0f64..2.0, y in -2.0f64..2.0, z in -2.0f64..2.0, lam in 0.2f64..3.0) {
        let q = vec![x, y, z];
        prop_assume!(Sphere2.in_domain(&q) && (x * x + y * y + z * z).sqrt() > 0.1);
        let p = project(&Sphere2, &AmbientPoint::new(q.clone())).unwrap();
        let pp = project(&Sphere2, &p).unwrap();
        let scaled = project(&Sphere2, &AmbientPoint::new(q.iter().map(|c| lam * c).collect())).unwrap();
        for c in 0..3 {
            prop_assert!((p.coords[c] - pp.coords[c]).abs() < 1e-14);
            prop_assert!((p.coords[c] - scaled.coords[c]).abs() < 1e-14);
        }
    }

    #[test]
    fn complex_structure_is_an_isometry(th in 0.1f64..3.0, ph in -3.0f64..3.0, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let q = AmbientPoint::new(vec![th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
        let f = [[th.cos() * ph.cos(), th.cos() * ph.sin(), -th.sin()], [-ph.sin(), ph.cos(), 0.0]];
        let x: Vec<f64> = (0..3).map(|c| a * f[0][c] + b * f[1][c]).collect();
        let jx = j_apply(&Sphere2, &q, &TangentVector { base: q.clone(), vec: x.clone() }).unwrap();
        let jjx = j_apply(&Sphere2, &q, &jx).unwrap();
        let n = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
        prop_assert!((n(&jx.vec) - n(&x)).abs() < 1e-14);
        for c in 0..3 {
            prop_assert!((jjx.vec[c] + x[c]).abs() < 1e-14);
        }
    }

    #[test]
    fn d_rho_complements_d_pi(x in -1.5f64..1.5, y in -1.5f64..1.5, z in 0.5f64..1.5) {
        let q = AmbientPoint::new(vec![x, y, z]);
        let a = d_pi(&Sphere2, &q).unwrap();
        let b = d_rho(&Sphere2, &q).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { 1.0 } else { 0.0 };
                prop_assert!((a.get(i, j) + b.get(i, j) - id).abs() < 1e-15);
            }
        }
    }
}

use proptest::prelude::*;
use sflab::error::Error;
use sflab::exec::Exec;
use sflab::geometry::{FlatTorus, Sphere2};
use sflab::operators::*;
use sflab::scenario;
use sflab::spectral::{Field, GridSpec};
use sflab::verify::{normal_identity_gap, variational_gap};
use std::f64::consts::PI;
use std::sync::Arc;

fn line(m: usize) -> GridSpec {
    GridSpec::new(1, m, 2.0 * PI).unwrap()
}

#[test]
fn helical_energy_closed_form() {
    let g = line(64);
    let ctx = OperatorContext::new(Arc::new(Sphere2), g);
    for (th, k) in [(PI / 3.0, 2), (0.4, 1), (1.2, 3)] {
        let v = scenario::helical(g, th, k, 0.0);
        let e = dirichlet_energy(&ctx, &v);
        let want = PI * (k * k) as f64 * th.sin().powi(2);
        assert!((e - want).abs() < 1e-12 * want, "{e} vs {want}");
    }
}

#[test]
fn equator_has_zero_tension_and_el() {
    let g = line(32);
    let ctx = OperatorContext::new(Arc::new(Sphere2), g);
    let v = Field::from_fn(g, 3, |x, o| {
        o.copy_from_slice(&[(2.0 * x[0]).cos(), (2.0 * x[0]).sin(), 0.0])
    });
    assert!(tension_ambient(&ctx, &v).unwrap().max_abs() < 1e-12);
    assert!(el_operator(&ctx, &v).unwrap().max_abs() < 1e-10);
    let f = functionals(&ctx, &v).unwrap();
    assert!(f.tension_energy < 1e-24);
}

#[test]
fn torus_variational_and_normal_identities() {
    let g = GridSpec::new(2, 16, 2.0 * PI).unwrap();
    let ctx = OperatorContext::new(Arc::new(FlatTorus), g).with_dealias(false);
    assert!(variational_gap(&ctx, &FlatTorus, 40, 5).unwrap() < 1e-6);
    let g = GridSpec::new(2, 64, 2.0 * PI).unwrap();
    let ctx = OperatorContext::new(Arc::new(FlatTorus), g).with_dealias(false);
    assert!(normal_identity_gap(&ctx, &FlatTorus, 50, 2).unwrap() < 1e-6);
}

#[test]
fn field_outside_tube_is_rejected() {
    let g = line(16);
    let ctx = OperatorContext::new(Arc::new(Sphere2), g);
    let v = Field::from_fn(g, 3, |x, o| o.copy_from_slice(&[0.01 * x[0].cos(), 0.0, 0.0]));
    assert!(matches!(
        el_operator(&ctx, &v),
        Err(Error::OutsideTubularNeighborhood { .. })
    ));
    let wrong = Field::zeros(g, 4);
    assert!(rhs_regularized(&ctx, &wrong, 1e-3, 0.0).is_err());
}

#[test]
fn sequential_and_parallel_assembly_agree() {
    let g = GridSpec::new(2, 32, 2.0 * PI).unwrap();
    let u = scenario::random_on_manifold(g, &Sphere2, 5, 3, 0.6);
    let v = scenario::radial_perturbation(&u, 6, 2, 0.05);
    let a = OperatorContext::new(Arc::new(Sphere2), g).with_exec(Exec::Sequential);
    let b = OperatorContext::new(Arc::new(Sphere2), g).with_exec(Exec::Auto);
    let (ra, rb) = (
        rhs_regularized(&a, &v, 1e-2, 0.1).unwrap(),
        rhs_regularized(&b, &v, 1e-2, 0.1).unwrap(),
    );
    assert_eq!(ra, rb);
}

#[test]
fn mutation_changes_el_but_not_tension() {
    let g = line(64);
    let u = scenario::random_on_manifold(g, &Sphere2, 8, 3, 0.6);
    let a = OperatorContext::new(Arc::new(Sphere2), g);
    let b = a.clone().with_mutation(Some(Mutation::FlipHessianSign));
    assert_eq!(tension_ambient(&a, &u).unwrap(), tension_ambient(&b, &u).unwrap());
    assert!(
        el_operator(&a, &u)
            .unwrap()
            .sub(&el_operator(&b, &u).unwrap())
            .max_abs()
            > 1e-3
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn normal_correction_is_normal_on_manifold(seed in 0u64..10_000) {
        // 𝓗 = dρ(𝓕) lies in the normal space, so it is parallel to u on S²
        let g = line(128);
        let ctx = OperatorContext::new(Arc::new(Sphere2), g);
        let u = scenario::random_on_manifold(g, &Sphere2, seed, 2, 0.5);
        let h = normal_correction(&ctx, &u).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..g.npoints() {
            let (p, q) = (u.point_vec(i), h.point_vec(i));
            let along: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
            let off = (0..3).map(|c| (q[c] - along * p[c]).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(off);
        }
        prop_assert!(worst < 1e-8 * h.max_abs().max(1.0));
    }

    #[test]
    fn schrodinger_term_is_tangent(seed in 0u64..10_000) {
        let g = line(64);
        let ctx = OperatorContext::new(Arc::new(Sphere2), g);
        let u = scenario::random_on_manifold(g, &Sphere2, seed, 2, 0.5);
        let s = schrodinger_term(&ctx, &u).unwrap();
        let dot: f64 = (0..g.npoints()).map(|i| {
            let (p, q) = (u.point_vec(i), s.point_vec(i));
            (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]).abs()
        }).fold(0.0, f64::max);
        prop_assert!(dot < 1e-10 * s.max_abs().max(1.0));
    }
}

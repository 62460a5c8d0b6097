use std::f64::consts::PI;

use cmin_core::flows::*;
use cmin_core::{FlowSpec, IntegratorConfig, PhasePoint, PhaseSpace};
use proptest::prelude::*;

fn close(sp: &PhaseSpace, a: &PhasePoint, b: &PhasePoint) -> f64 {
    sp.distance(a.coords(), b.coords())
}

fn group_gap(f: &FlowSpec, x: &PhasePoint, s: f64, t: f64) -> f64 {
    let a = f.advance(&f.advance(x, s).unwrap(), t).unwrap();
    let b = f.advance(x, s + t).unwrap();
    close(&f.space, &a, &b)
}

fn torus_point() -> impl Strategy<Value = PhasePoint> {
    (
        0.0..std::f64::consts::TAU,
        0.0f64..1.0,
        0.0..std::f64::consts::TAU,
    )
        .prop_map(|(th, mu, ph)| PhasePoint::new(solid_torus_point(th, mu, ph)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closed_form_group_property(x in torus_point(), s in -20.0f64..20.0, t in -20.0f64..20.0) {
        for f in [v_lambda(LambdaSpec::Identity), v_lambda(LambdaSpec::Golden)] {
            prop_assert!(group_gap(&f, &x, s, t) < 1e-8);
        }
        let h = hopf();
        let mut p = x.coords().to_vec();
        h.space.project(&mut p);
        prop_assert!(group_gap(&h, &PhasePoint::new(p), s, t) < 1e-8);
    }

    #[test]
    fn integrated_group_property(x in -0.5f64..0.5, y in -1.5f64..1.5, s in 0.0f64..5.0, t in 0.0f64..5.0) {
        let f = pendulum();
        prop_assert!(group_gap(&f, &PhasePoint::new(vec![x, y]), s, t) < 1e-7);
    }

    #[test]
    fn north_south_group_property(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, s in -8.0f64..8.0, t in -8.0f64..8.0) {
        let f = north_south(2);
        let mut p = vec![a, b, c];
        if cmin_core::space::norm(&p) < 1e-3 {
            p = vec![1.0, 0.0, 0.0];
        }
        f.space.project(&mut p);
        prop_assert!(group_gap(&f, &PhasePoint::new(p), s, t) < 1e-8);
    }

    #[test]
    fn projection_is_idempotent_and_lands_in_space(v in prop::collection::vec(-3.0f64..3.0, 4)) {
        for sp in [PhaseSpace::sphere(3), PhaseSpace::solid_torus(), PhaseSpace::euclidean(4)] {
            let mut p = v.clone();
            sp.project(&mut p);
            prop_assert!(sp.contains(&p));
            let mut q = p.clone();
            sp.project(&mut q);
            prop_assert!(sp.distance(&p, &q) < 1e-15);
        }
        let cyl = PhaseSpace::cylinder();
        let mut p = v[..2].to_vec();
        cyl.project(&mut p);
        prop_assert!(cyl.contains(&p));
    }

    #[test]
    fn v_lambda_closed_form_conserves_moduli(x in torus_point(), t in -500.0f64..500.0) {
        let f = v_lambda(LambdaSpec::Identity);
        let y = f.advance(&x, t).unwrap();
        let (a, b) = (x.coords(), y.coords());
        prop_assert!((a[0].hypot(a[1]) - b[0].hypot(b[1])).abs() < 1e-15);
        prop_assert!((a[2].hypot(a[3]) - b[2].hypot(b[3])).abs() < 1e-15);
    }
}

#[test]
fn v_lambda_integrated_conserves_moduli() {
    let f = v_lambda_integrated(LambdaSpec::Identity).with_integrator(IntegratorConfig {
        rtol: 1e-12,
        atol: 1e-12,
        ..IntegratorConfig::default()
    });
    let g = v_lambda(LambdaSpec::Identity);
    for &(mu, phi) in &[(0.3, 0.0), (0.707, 1.0), (0.95, -2.0)] {
        let x = PhasePoint::new(solid_torus_point(0.4, mu, phi));
        let orbit = f.orbit_sample(&x, 100.0, 0.5).unwrap();
        let mut worst = 0.0f64;
        for p in orbit.coords.chunks_exact(4) {
            worst = worst.max((p[0].hypot(p[1]) - 1.0).abs());
            worst = worst.max((p[2].hypot(p[3]) - mu).abs());
        }
        assert!(worst < 1e-10, "|z| drift {worst:e} at μ = {mu}");
        let a = f.advance(&x, 30.0).unwrap();
        let b = g.advance(&x, 30.0).unwrap();
        assert!(close(&f.space, &a, &b) < 1e-6);
    }
}

#[test]
fn pendulum_conserves_energy() {
    let f = pendulum();
    for &(x, y) in &[
        (0.0, 0.3),
        (0.0, 0.75),
        (-0.5, 0.2),
        (-0.5, -1.8),
        (0.2, 0.0),
    ] {
        let p = PhasePoint::new(vec![x, y]);
        let e0 = pendulum_energy(p.coords());
        let orbit = f.orbit_sample(&p, 21.0, 0.01).unwrap();
        let worst = orbit
            .coords
            .chunks_exact(2)
            .map(|q| (pendulum_energy(q) - e0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "energy drift {worst:e} from ({x}, {y})");
    }
}

#[test]
fn pendulum_libration_period_oracle() {
    let f = pendulum();
    for a in [0.05, 0.2, 0.35] {
        let x = PhasePoint::new(vec![a, 0.0]);
        let t = pendulum_libration_period(a);
        let y = f.advance(&x, t).unwrap();
        assert!(close(&f.space, &x, &y) < 1e-6, "amplitude {a}");
        let half = f.advance(&x, t / 2.0).unwrap();
        assert!((half.coords()[0] + a).abs() < 1e-6);
    }
}

/// Sign analysis of `r′ = −r³ sin²(π/r)`: zeros exactly at `1/n`, negative
/// in between and beyond 1.
#[test]
fn nested_radial_oracle() {
    for n in 1..200 {
        let r = 1.0 / n as f64;
        assert!(nested_radial_speed(r).abs() < 1e-9 * r.powi(3) + 1e-15);
        for k in 1..10 {
            let s = 1.0 / (n as f64 + k as f64 / 10.0);
            assert!(nested_radial_speed(s) < 0.0, "r = {s}");
        }
    }
    for r in [1.01, 1.5, 3.0, 10.0] {
        assert!(nested_radial_speed(r) < 0.0);
    }
    // The planar field's radial component matches the profile.
    let f = nested_rings();
    for r in [0.3, 0.42, 0.77, 1.3] {
        let v = f.field_at(&[r, 0.0]).unwrap();
        assert!((v[0] - nested_radial_speed(r)).abs() < 1e-12);
        assert!((v[1] - r).abs() < 1e-12);
    }
}

#[test]
fn nested_rings_are_invariant_circles() {
    let f = nested_rings();
    for n in 1..=4 {
        let r = 1.0 / n as f64;
        let x = PhasePoint::new(vec![r, 0.0]);
        let y = f.advance(&x, 50.0).unwrap();
        let gap = (cmin_core::space::norm(y.coords()) - r).abs();
        assert!(gap < 1e-6, "ring 1/{n} drifted by {gap:e}");
    }
    // One-sided drift: a point between two rings ends near the inner one.
    let y = f
        .advance(&PhasePoint::new(vec![0.45, 0.0]), 2000.0)
        .unwrap();
    let ry = cmin_core::space::norm(y.coords());
    assert!(ry < 0.45 && ry > 1.0 / 3.0);
}

#[test]
fn hopf_fibres_have_period_two_pi() {
    let f = hopf();
    for (th, ph) in [(0.3, 0.0), (1.7, 2.0), (PI, 0.5)] {
        let x = PhasePoint::new(hopf_fibre_point(th, ph));
        let y = f.advance(&x, std::f64::consts::TAU).unwrap();
        assert!(close(&f.space, &x, &y) < 1e-12);
        let z = f.advance(&x, 1.3).unwrap();
        assert!(hopf_fibre_distance(x.coords(), z.coords()) < 1e-7);
    }
}

#[test]
fn north_south_poles_are_fixed() {
    let f = north_south(2);
    for s in [1.0, -1.0] {
        let p = PhasePoint::new(vec![0.0, 0.0, s]);
        assert!(f.is_fixed_point(p.coords()));
        assert_eq!(f.advance(&p, 17.0).unwrap(), p);
    }
}

//! Example flows and their closed-form oracles.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::flow::FlowSpec;
use crate::numeric::elliptic_k;
use crate::space::PhaseSpace;

/// `(√5 − 1)/2` as a double.
pub const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Pendulum `ẋ = y, ẏ = −sin 2πx` on the cylinder (x has period 1).
pub fn pendulum() -> FlowSpec {
    FlowSpec::from_field("pendulum", PhaseSpace::cylinder(), |x, v| {
        v[0] = x[1];
        v[1] = -(TAU * x[0]).sin();
    })
}

/// `H(x, y) = y²/2 − cos(2πx)/(2π)`.
pub fn pendulum_energy(p: &[f64]) -> f64 {
    0.5 * p[1] * p[1] - (TAU * p[0]).cos() / TAU
}

/// Energy of the homoclinic level through the saddle.
pub const PENDULUM_SEPARATRIX_ENERGY: f64 = 1.0 / TAU;

/// Period of the libration with amplitude `a` (turning point `x = a`,
/// `0 < a < 1/2`): `4 K(sin πa) / sqrt(2π)`.
pub fn pendulum_libration_period(a: f64) -> f64 {
    4.0 * elliptic_k((PI * a).sin()) / TAU.sqrt()
}

/// Speed at `x = 0` of the libration with amplitude `a`.
pub fn pendulum_libration_speed(a: f64) -> f64 {
    ((1.0 - (TAU * a).cos()) / PI).sqrt()
}

/// Rotation number profile of `v_λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LambdaSpec {
    Rational {
        p: i64,
        q: i64,
    },
    Constant {
        value: f64,
    },
    Golden,
    /// `λ(s) = s`.
    Identity,
}

impl LambdaSpec {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            LambdaSpec::Rational { p, q } => p as f64 / q as f64,
            LambdaSpec::Constant { value } => value,
            LambdaSpec::Golden => GOLDEN,
            LambdaSpec::Identity => s,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            LambdaSpec::Rational { p, q } => format!("{p}/{q}"),
            LambdaSpec::Constant { value } => format!("{value}"),
            LambdaSpec::Golden => "golden".into(),
            LambdaSpec::Identity => "identity".into(),
        }
    }
}

fn v_lambda_field(lambda: LambdaSpec) -> impl Fn(&[f64], &mut [f64]) + Send + Sync + Clone {
    move |x: &[f64], v: &mut [f64]| {
        let l = lambda.eval(x[2] * x[2] + x[3] * x[3]);
        v[0] = -x[1];
        v[1] = x[0];
        v[2] = -l * x[3];
        v[3] = l * x[2];
    }
}

/// `v_λ(z1, z2) = (i z1, i λ(|z2|²) z2)` on `S¹ × D²`, in closed form.
pub fn v_lambda(lambda: LambdaSpec) -> FlowSpec {
    FlowSpec::from_map(
        format!("v_lambda[{}]", lambda.label()),
        PhaseSpace::solid_torus(),
        move |t, x, o| {
            let l = lambda.eval(x[2] * x[2] + x[3] * x[3]);
            rotate(t, &x[0..2], &mut o[0..2]);
            rotate(l * t, &x[2..4], &mut o[2..4]);
        },
        Some(Arc::new(v_lambda_field(lambda))),
    )
}

/// The same flow through the integrator.
pub fn v_lambda_integrated(lambda: LambdaSpec) -> FlowSpec {
    FlowSpec::from_field(
        format!("v_lambda[{}]-integrated", lambda.label()),
        PhaseSpace::solid_torus(),
        v_lambda_field(lambda),
    )
}

/// Point `(1, 0, μ cos φ, μ sin φ)` rotated by `θ` in the first factor.
pub fn solid_torus_point(theta: f64, mu: f64, phi: f64) -> Vec<f64> {
    vec![theta.cos(), theta.sin(), mu * phi.cos(), mu * phi.sin()]
}

#[inline]
fn rotate(t: f64, x: &[f64], o: &mut [f64]) {
    let (s, c) = t.sin_cos();
    o[0] = c * x[0] - s * x[1];
    o[1] = s * x[0] + c * x[1];
}

/// `(t, z) ↦ e^{it} z` on `S³ ⊂ ℂ²`.
pub fn hopf() -> FlowSpec {
    FlowSpec::from_map(
        "hopf",
        PhaseSpace::sphere(3),
        |t, x, o| {
            rotate(t, &x[0..2], &mut o[0..2]);
            rotate(t, &x[2..4], &mut o[2..4]);
        },
        Some(Arc::new(|x: &[f64], v: &mut [f64]| {
            v[0] = -x[1];
            v[1] = x[0];
            v[2] = -x[3];
            v[3] = x[2];
        })),
    )
}

/// Lift of the base point with polar angle `theta`, azimuth `phi` to the
/// Hopf fibre `(cos θ/2, e^{iφ} sin θ/2)`.
pub fn hopf_fibre_point(theta: f64, phi: f64) -> Vec<f64> {
    let (s, c) = (theta / 2.0).sin_cos();
    vec![c, 0.0, s * phi.cos(), s * phi.sin()]
}

/// Exact `d_H` between the Hopf fibres through `p` and `q`:
/// `sqrt(2 − 2|⟨p, q⟩_ℂ|)`.
pub fn hopf_fibre_distance(p: &[f64], q: &[f64]) -> f64 {
    let re = p[0] * q[0] + p[1] * q[1] + p[2] * q[2] + p[3] * q[3];
    let im = p[0] * q[1] - p[1] * q[0] + p[2] * q[3] - p[3] * q[2];
    (2.0 - 2.0 * re.hypot(im)).max(0.0).sqrt()
}

/// `r′ = −r³ sin²(π/r)`, `θ′ = 1` in the plane, with rings at `r = 1/n`.
pub fn nested_rings() -> FlowSpec {
    FlowSpec::from_field("nested_rings", PhaseSpace::euclidean(2), |x, v| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let g = if r2 > 0.0 {
            let s = (PI / r2.sqrt()).sin();
            r2 * s * s
        } else {
            0.0
        };
        v[0] = -g * x[0] - x[1];
        v[1] = -g * x[1] + x[0];
    })
}

/// Radial speed of [`nested_rings`].
pub fn nested_radial_speed(r: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        -r.powi(3) * (PI / r).sin().powi(2)
    }
}

/// North–south flow `v(x) = e_N − (x·e_N) x` on `Sⁿ`, in closed form.
///
/// With `h = x·e_N`, `h(t) = (h cosh t + sinh t)/(cosh t + h sinh t)` and the
/// other coordinates scale by `1/(cosh t + h sinh t)`.
pub fn north_south(n: usize) -> FlowSpec {
    let d = n + 1;
    FlowSpec::from_map(
        format!("north_south[S{n}]"),
        PhaseSpace::sphere(n),
        move |t, x, o| {
            let h = x[d - 1];
            if h <= -1.0 || h >= 1.0 {
                o.copy_from_slice(x);
                return;
            }
            let th = t.tanh();
            let den = 1.0 + h * th;
            let sech = 1.0 / t.cosh();
            for i in 0..d - 1 {
                o[i] = x[i] * sech / den;
            }
            o[d - 1] = (h + th) / den;
        },
        Some(Arc::new(move |x: &[f64], v: &mut [f64]| {
            let h = x[d - 1];
            for i in 0..d {
                v[i] = -h * x[i];
            }
            v[d - 1] += 1.0;
        })),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::PhasePoint;

    #[test]
    fn hopf_has_period_two_pi() {
        let f = hopf();
        let x = PhasePoint::new(vec![1.0, 0.0, 0.0, 0.0]);
        let y = f.advance(&x, TAU).unwrap();
        assert!(f.space.distance(x.coords(), y.coords()) < 1e-8);
    }

    #[test]
    fn pendulum_libration_returns() {
        let f = pendulum();
        let x = PhasePoint::new(vec![0.1, 0.0]);
        let y = f.advance(&x, pendulum_libration_period(0.1)).unwrap();
        assert!(f.space.distance(x.coords(), y.coords()) < 1e-6);
    }

    #[test]
    fn nested_radial_profile_signs() {
        for n in 1..20 {
            assert!(nested_radial_speed(1.0 / n as f64).abs() < 1e-12);
            let mid = 0.5 * (1.0 / n as f64 + 1.0 / (n + 1) as f64);
            assert!(nested_radial_speed(mid) < 0.0);
        }
        assert!(nested_radial_speed(1.5) < 0.0);
    }

    #[test]
    fn north_south_closed_form_matches_field() {
        let f = north_south(2);
        let x = PhasePoint::new(vec![0.6, 0.0, -0.8]);
        let g = FlowSpec::from_field("ns-int", PhaseSpace::sphere(2), |x, v| {
            let h = x[2];
            for i in 0..3 {
                v[i] = -h * x[i];
            }
            v[2] += 1.0;
        });
        let a = f.advance(&x, 1.7).unwrap();
        let b = g.advance(&x, 1.7).unwrap();
        assert!(f.space.distance(a.coords(), b.coords()) < 1e-7);
        let far = f.advance(&x, 800.0).unwrap();
        assert!((far.coords()[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fibre_distance_oracle_is_symmetric() {
        let p = hopf_fibre_point(0.3, 1.0);
        let q = hopf_fibre_point(1.1, -0.4);
        assert!((hopf_fibre_distance(&p, &q) - hopf_fibre_distance(&q, &p)).abs() < 1e-15);
        assert!(hopf_fibre_distance(&p, &p) < 1e-7);
    }
}

//! Phase spaces: charts, metrics and renormalisation.
//!
//! Every point is stored in ambient coordinates. The metric is the flat
//! ambient metric (chord metric for embedded spheres and the solid torus),
//! with wraparound on periodic axes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chart kinds supported by the toolkit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartKind {
    Euclidean,
    /// `S¹ × ℝ` with the circle coordinate first, period 1.
    Cylinder,
    /// Unit sphere `Sⁿ ⊂ ℝⁿ⁺¹`.
    EmbeddedSphere,
    /// `S¹ × D² ⊂ ℂ²`, coordinates `(Re z1, Im z1, Re z2, Im z2)`.
    SolidTorus,
}

/// Coordinate tolerance for the space constraint (unit norm etc.).
pub const CONSTRAINT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpace {
    pub name: String,
    pub kind: ChartKind,
    pub dim: usize,
    pub ambient_dim: usize,
}

impl PhaseSpace {
    pub fn euclidean(dim: usize) -> Self {
        Self {
            name: format!("R{dim}"),
            kind: ChartKind::Euclidean,
            dim,
            ambient_dim: dim,
        }
    }

    pub fn cylinder() -> Self {
        Self {
            name: "S1xR".into(),
            kind: ChartKind::Cylinder,
            dim: 2,
            ambient_dim: 2,
        }
    }

    pub fn sphere(dim: usize) -> Self {
        Self {
            name: format!("S{dim}"),
            kind: ChartKind::EmbeddedSphere,
            dim,
            ambient_dim: dim + 1,
        }
    }

    pub fn solid_torus() -> Self {
        Self {
            name: "S1xD2".into(),
            kind: ChartKind::SolidTorus,
            dim: 3,
            ambient_dim: 4,
        }
    }

    /// Period of an ambient axis, if it wraps.
    pub fn period(&self, axis: usize) -> Option<f64> {
        match (self.kind, axis) {
            (ChartKind::Cylinder, 0) => Some(1.0),
            _ => None,
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.distance_sq(a, b).sqrt()
    }

    #[inline]
    pub fn distance_sq(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self.kind {
            ChartKind::Cylinder => {
                let dx = wrap_unit(a[0] - b[0]);
                let mut s = dx * dx;
                for i in 1..a.len() {
                    let d = a[i] - b[i];
                    s += d * d;
                }
                s
            }
            _ => {
                let mut s = 0.0;
                for i in 0..a.len() {
                    let d = a[i] - b[i];
                    s += d * d;
                }
                s
            }
        }
    }

    /// Map an ambient point back onto the space. Idempotent.
    pub fn project(&self, x: &mut [f64]) {
        match self.kind {
            ChartKind::Euclidean => {}
            ChartKind::Cylinder => x[0] = wrap_unit(x[0]),
            ChartKind::EmbeddedSphere => {
                let n = norm(x);
                if n > 0.0 && (n - 1.0).abs() > f64::EPSILON {
                    x.iter_mut().for_each(|c| *c /= n);
                }
            }
            ChartKind::SolidTorus => {
                let n1 = x[0].hypot(x[1]);
                if n1 > 0.0 && (n1 - 1.0).abs() > f64::EPSILON {
                    x[0] /= n1;
                    x[1] /= n1;
                }
                let n2 = x[2].hypot(x[3]);
                if n2 > 1.0 {
                    x[2] /= n2;
                    x[3] /= n2;
                }
            }
        }
    }

    /// Whether `x` satisfies the chart constraint within [`CONSTRAINT_TOL`].
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.ambient_dim || x.iter().any(|c| !c.is_finite()) {
            return false;
        }
        match self.kind {
            ChartKind::Euclidean => true,
            ChartKind::Cylinder => (-0.5 - CONSTRAINT_TOL..0.5 + CONSTRAINT_TOL).contains(&x[0]),
            ChartKind::EmbeddedSphere => (norm(x) - 1.0).abs() <= CONSTRAINT_TOL,
            ChartKind::SolidTorus => {
                (x[0].hypot(x[1]) - 1.0).abs() <= CONSTRAINT_TOL
                    && x[2].hypot(x[3]) <= 1.0 + CONSTRAINT_TOL
            }
        }
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OffSpace {
                space: self.name.clone(),
                coords: x.to_vec(),
            })
        }
    }
}

/// Representative of `x` modulo 1 in `[-1/2, 1/2)`.
#[inline]
pub fn wrap_unit(x: f64) -> f64 {
    x - (x + 0.5).floor()
}

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// A point in ambient coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhasePoint(pub Vec<f64>);

impl PhasePoint {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Self(coords.into())
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for PhasePoint {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl AsRef<[f64]> for PhasePoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cylinder_wraps() {
        let s = PhaseSpace::cylinder();
        assert!((s.distance(&[0.49, 0.0], &[-0.49, 0.0]) - 0.02).abs() < 1e-12);
        let mut x = [1.3, 2.0];
        s.project(&mut x);
        assert!((x[0] - 0.3).abs() < 1e-12);
        assert_eq!(wrap_unit(0.5), -0.5);
    }

    #[test]
    fn off_space_is_rejected() {
        let s = PhaseSpace::sphere(2);
        assert!(s.check(&[1.0, 0.0, 0.0]).is_ok());
        assert!(s.check(&[1.0, 1.0, 0.0]).is_err());
        assert!(s.check(&[1.0, 0.0]).is_err());
    }

    fn spaces() -> Vec<PhaseSpace> {
        vec![
            PhaseSpace::euclidean(2),
            PhaseSpace::cylinder(),
            PhaseSpace::sphere(2),
            PhaseSpace::sphere(3),
            PhaseSpace::solid_torus(),
        ]
    }

    proptest! {
        #[test]
        fn project_is_idempotent(coords in prop::collection::vec(-3.0f64..3.0, 4), which in 0usize..5) {
            let s = &spaces()[which];
            let mut x = coords[..s.ambient_dim].to_vec();
            if x.iter().all(|c| c.abs() < 1e-6) { x[0] = 1.0; }
            s.project(&mut x);
            let mut y = x.clone();
            s.project(&mut y);
            for (a, b) in x.iter().zip(&y) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            prop_assert!(s.contains(&x));
        }

        #[test]
        fn metric_axioms(a in prop::collection::vec(-2.0f64..2.0, 4), b in prop::collection::vec(-2.0f64..2.0, 4), which in 0usize..5) {
            let s = &spaces()[which];
            let (mut a, mut b) = (a[..s.ambient_dim].to_vec(), b[..s.ambient_dim].to_vec());
            a[0] += 0.1; b[0] -= 0.1;
            s.project(&mut a);
            s.project(&mut b);
            prop_assert!(s.distance(&a, &b) >= 0.0);
            prop_assert_eq!(s.distance(&a, &b), s.distance(&b, &a));
            prop_assert_eq!(s.distance(&a, &a), 0.0);
        }
    }
}

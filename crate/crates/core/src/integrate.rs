//! Adaptive Dormand–Prince 5(4) integrator with per-step projection.

use serde::{Deserialize, Serialize};

use crate::space::PhaseSpace;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    /// Coordinates beyond this magnitude count as escape to infinity.
    pub escape_bound: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-9,
            max_step: 0.1,
            escape_bound: 1e8,
            max_steps: 50_000_000,
        }
    }
}

/// Why an integration stopped early.
#[derive(Clone, Debug, PartialEq)]
pub struct Blowup {
    /// Time reached (in integration time, always non-negative).
    pub time: f64,
    pub last_state: Vec<f64>,
}

// Dormand–Prince coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b* (embedded 4th order error weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Stateful integrator for `dx/ds = sign * field(x)`.
pub struct Stepper<'a, F: Fn(&[f64], &mut [f64])> {
    field: &'a F,
    space: &'a PhaseSpace,
    cfg: IntegratorConfig,
    sign: f64,
    pub x: Vec<f64>,
    pub t: f64,
    h: f64,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    xnew: Vec<f64>,
    steps: usize,
}

impl<'a, F: Fn(&[f64], &mut [f64])> Stepper<'a, F> {
    pub fn new(
        field: &'a F,
        space: &'a PhaseSpace,
        cfg: IntegratorConfig,
        sign: f64,
        x0: &[f64],
    ) -> Self {
        let n = x0.len();
        let mut s = Self {
            field,
            space,
            cfg,
            sign,
            x: x0.to_vec(),
            t: 0.0,
            h: 0.0,
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            xnew: vec![0.0; n],
            steps: 0,
        };
        s.eval(0);
        s.h = s.initial_step();
        s
    }

    fn eval(&mut self, slot: usize) {
        let (x, k) = if slot == 0 {
            (&self.x, &mut self.k[0])
        } else {
            (&self.tmp, &mut self.k[slot])
        };
        (self.field)(x, k);
        if self.sign < 0.0 {
            k.iter_mut().for_each(|v| *v = -*v);
        }
    }

    fn initial_step(&self) -> f64 {
        let scale: f64 = self
            .x
            .iter()
            .map(|v| self.cfg.atol + self.cfg.rtol * v.abs())
            .fold(f64::INFINITY, f64::min);
        let speed = self.k[0].iter().map(|v| v * v).sum::<f64>().sqrt();
        let h = if speed > 0.0 {
            0.01 * (scale / speed).powf(0.2).max(1e-3)
        } else {
            self.cfg.max_step
        };
        h.min(self.cfg.max_step)
    }

    fn stage(&mut self, coeffs: &[f64], h: f64) {
        for i in 0..self.x.len() {
            let mut acc = 0.0;
            for (j, c) in coeffs.iter().enumerate() {
                acc += c * self.k[j][i];
            }
            self.tmp[i] = self.x[i] + h * acc;
        }
    }

    /// Advance exactly to integration time `target >= self.t`.
    pub fn advance_to(&mut self, target: f64) -> Result<(), Blowup> {
        while self.t < target {
            let remaining = target - self.t;
            let mut h = self.h.min(self.cfg.max_step);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let err = self.try_step(h);
            if !err.is_finite() {
                return Err(self.blowup());
            }
            if err <= 1.0 {
                if last {
                    self.t = target;
                } else {
                    self.t += h;
                }
                std::mem::swap(&mut self.x, &mut self.xnew);
                self.space.project(&mut self.x);
                if self
                    .x
                    .iter()
                    .any(|v| !v.is_finite() || v.abs() > self.cfg.escape_bound)
                {
                    return Err(self.blowup());
                }
                self.eval(0);
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // keep the proposal for the next step unless this one was clipped
                if !last || fac < 1.0 {
                    self.h = h * fac;
                }
            } else {
                self.h = h * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
            self.steps += 1;
            if self.h < 1e-14 * (1.0 + self.t.abs()) || self.steps > self.cfg.max_steps {
                return Err(self.blowup());
            }
        }
        Ok(())
    }

    fn blowup(&self) -> Blowup {
        Blowup {
            time: self.t,
            last_state: self.x.clone(),
        }
    }

    /// One trial step; fills `xnew` and returns the scaled error norm.
    fn try_step(&mut self, h: f64) -> f64 {
        self.stage(&[A21], h);
        self.eval(1);
        self.stage(&[A31, A32], h);
        self.eval(2);
        self.stage(&[A41, A42, A43], h);
        self.eval(3);
        self.stage(&[A51, A52, A53, A54], h);
        self.eval(4);
        self.stage(&[A61, A62, A63, A64, A65], h);
        self.eval(5);
        for i in 0..self.x.len() {
            self.xnew[i] = self.x[i]
                + h * (B1 * self.k[0][i]
                    + B3 * self.k[2][i]
                    + B4 * self.k[3][i]
                    + B5 * self.k[4][i]
                    + B6 * self.k[5][i]);
        }
        std::mem::swap(&mut self.tmp, &mut self.xnew);
        self.eval(6);
        std::mem::swap(&mut self.tmp, &mut self.xnew);
        let n = self.x.len() as f64;
        let mut acc = 0.0;
        for i in 0..self.x.len() {
            let e = h
                * (E1 * self.k[0][i]
                    + E3 * self.k[2][i]
                    + E4 * self.k[3][i]
                    + E5 * self.k[4][i]
                    + E6 * self.k[5][i]
                    + E7 * self.k[6][i]);
            let sc = self.cfg.atol + self.cfg.rtol * self.x[i].abs().max(self.xnew[i].abs());
            acc += (e / sc) * (e / sc);
        }
        (acc / n).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_full_period() {
        let f = |x: &[f64], d: &mut [f64]| {
            d[0] = x[1];
            d[1] = -x[0];
        };
        let space = PhaseSpace::euclidean(2);
        let mut st = Stepper::new(&f, &space, IntegratorConfig::default(), 1.0, &[1.0, 0.0]);
        st.advance_to(std::f64::consts::TAU).unwrap();
        assert!((st.x[0] - 1.0).abs() < 1e-7, "{:?}", st.x);
        assert!(st.x[1].abs() < 1e-7);
    }

    #[test]
    fn backward_sign_reverses() {
        let f = |x: &[f64], d: &mut [f64]| d[0] = x[0];
        let space = PhaseSpace::euclidean(1);
        let mut st = Stepper::new(&f, &space, IntegratorConfig::default(), -1.0, &[1.0]);
        st.advance_to(1.0).unwrap();
        assert!((st.x[0] - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn finite_time_blowup_is_reported() {
        let f = |x: &[f64], d: &mut [f64]| d[0] = x[0] * x[0];
        let space = PhaseSpace::euclidean(1);
        let mut st = Stepper::new(&f, &space, IntegratorConfig::default(), 1.0, &[1.0]);
        let err = st.advance_to(2.0).unwrap_err();
        assert!(err.time < 1.0 + 1e-6 && err.time > 0.9);
    }
}

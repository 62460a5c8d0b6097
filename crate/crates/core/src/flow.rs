//! Flows on phase spaces: advancing points and sampling orbits.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::integrate::{IntegratorConfig, Stepper};
use crate::space::{PhasePoint, PhaseSpace};

/// `x ↦ v(x)`, written into the output slice.
pub type VectorField = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// `(t, x) ↦ x^t`, written into the output slice.
pub type FlowMap = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub enum FlowKind {
    VectorField(VectorField),
    /// Closed-form flow; the generating field is kept when known so that
    /// equilibria can be recognised.
    ClosedForm {
        map: FlowMap,
        field: Option<VectorField>,
    },
}

/// A flow on a phase space.
///
/// Immutable after construction and cheap to clone; safe to share between
/// threads.
#[derive(Clone)]
pub struct FlowSpec {
    pub name: String,
    pub space: PhaseSpace,
    pub kind: FlowKind,
    /// `+1` for the flow itself, `-1` for its time reversal.
    pub orientation: f64,
    pub integrator: IntegratorConfig,
}

impl fmt::Debug for FlowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowSpec")
            .field("name", &self.name)
            .field("space", &self.space.name)
            .field(
                "kind",
                &match self.kind {
                    FlowKind::VectorField(_) => "vector-field",
                    FlowKind::ClosedForm { .. } => "closed-form",
                },
            )
            .field("orientation", &self.orientation)
            .finish()
    }
}

impl FlowSpec {
    pub fn from_field(
        name: impl Into<String>,
        space: PhaseSpace,
        field: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            space,
            kind: FlowKind::VectorField(Arc::new(field)),
            orientation: 1.0,
            integrator: IntegratorConfig::default(),
        }
    }

    pub fn from_map(
        name: impl Into<String>,
        space: PhaseSpace,
        map: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
        field: Option<VectorField>,
    ) -> Self {
        Self {
            name: name.into(),
            space,
            kind: FlowKind::ClosedForm {
                map: Arc::new(map),
                field,
            },
            orientation: 1.0,
            integrator: IntegratorConfig::default(),
        }
    }

    pub fn with_integrator(mut self, cfg: IntegratorConfig) -> Self {
        self.integrator = cfg;
        self
    }

    /// The time-reversed flow `φ(t, x) = θ(-t, x)`.
    pub fn reversed(&self) -> Self {
        let mut r = self.clone();
        r.orientation = -self.orientation;
        r
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.kind, FlowKind::ClosedForm { .. })
    }

    /// Field of this (possibly reversed) flow at `x`, if known.
    pub fn field_at(&self, x: &[f64]) -> Option<Vec<f64>> {
        let f = match &self.kind {
            FlowKind::VectorField(f) => f,
            FlowKind::ClosedForm { field: Some(f), .. } => f,
            FlowKind::ClosedForm { field: None, .. } => return None,
        };
        let mut out = vec![0.0; x.len()];
        f(x, &mut out);
        if self.orientation < 0.0 {
            out.iter_mut().for_each(|v| *v = -*v);
        }
        Some(out)
    }

    /// Whether `x` is a fixed point: vanishing field within `1e-8`, or for
    /// closed forms without a field, no motion over unit time.
    pub fn is_fixed_point(&self, x: &[f64]) -> bool {
        match self.field_at(x) {
            Some(v) => v.iter().map(|c| c * c).sum::<f64>().sqrt() < 1e-8,
            None => [0.5, 1.0, 2.0].iter().all(|&t| {
                self.advance_raw(x, t)
                    .map(|y| self.space.distance(x, &y) < 1e-10)
                    .unwrap_or(false)
            }),
        }
    }

    /// `x^t`. Negative times run the flow backwards.
    pub fn advance(&self, x: &PhasePoint, t: f64) -> Result<PhasePoint> {
        if !t.is_finite() {
            return Err(Error::invalid(format!("non-finite time {t}")));
        }
        self.space.check(x.coords())?;
        self.advance_raw(x.coords(), t).map(PhasePoint)
    }

    pub(crate) fn advance_raw(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        if t == 0.0 {
            return Ok(x.to_vec());
        }
        let t = t * self.orientation;
        match &self.kind {
            FlowKind::ClosedForm { map, .. } => {
                let mut out = vec![0.0; x.len()];
                map(t, x, &mut out);
                self.space.project(&mut out);
                if out.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Escape {
                        time: t,
                        last_state: x.to_vec(),
                    });
                }
                Ok(out)
            }
            FlowKind::VectorField(f) => {
                let f = f.as_ref();
                let mut st = Stepper::new(&f, &self.space, self.integrator, t.signum(), x);
                st.advance_to(t.abs()).map_err(|b| Error::Escape {
                    time: b.time * t.signum() * self.orientation,
                    last_state: b.last_state,
                })?;
                Ok(st.x)
            }
        }
    }

    /// Sample the orbit of `x` at `0, dt, 2dt, …` up to `horizon` (the last
    /// point is always at `horizon`).
    pub fn orbit_sample(&self, x: &PhasePoint, horizon: f64, dt: f64) -> Result<OrbitSample> {
        if !(horizon > 0.0 && dt > 0.0) {
            return Err(Error::invalid("orbit_sample needs horizon > 0 and dt > 0"));
        }
        self.space.check(x.coords())?;
        Ok(self.orbit_from(x.coords(), 0.0, horizon, dt))
    }

    /// Orbit sampled on `[start, start + span]` at spacing `dt`; truncates
    /// on escape.
    pub(crate) fn orbit_from(&self, x: &[f64], start: f64, span: f64, dt: f64) -> OrbitSample {
        let n = (span / dt).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
        if span - times[n] > 1e-9 * dt {
            times.push(span);
        } else {
            times[n] = span;
        }
        let dim = x.len();
        let mut coords = Vec::with_capacity(times.len() * dim);
        let mut truncated = None;
        let mut out_times = Vec::with_capacity(times.len());

        let origin = match self.advance_raw(x, start) {
            Ok(p) => p,
            Err(e) => {
                return OrbitSample {
                    dim,
                    times: vec![],
                    coords: vec![],
                    seed: PhasePoint(x.to_vec()),
                    escaped: Some(escape_time(&e)),
                }
            }
        };

        match &self.kind {
            FlowKind::ClosedForm { map, .. } => {
                let mut buf = vec![0.0; dim];
                for &s in &times {
                    if s == 0.0 {
                        buf.copy_from_slice(&origin);
                    } else {
                        map(s * self.orientation, &origin, &mut buf);
                        self.space.project(&mut buf);
                    }
                    if buf.iter().any(|v| !v.is_finite()) {
                        truncated = Some(start + s);
                        break;
                    }
                    coords.extend_from_slice(&buf);
                    out_times.push(start + s);
                }
            }
            FlowKind::VectorField(f) => {
                let f = f.as_ref();
                let mut st =
                    Stepper::new(&f, &self.space, self.integrator, self.orientation, &origin);
                for &s in &times {
                    if let Err(b) = st.advance_to(s) {
                        truncated = Some(start + b.time);
                        break;
                    }
                    coords.extend_from_slice(&st.x);
                    out_times.push(start + s);
                }
            }
        }
        OrbitSample {
            dim,
            times: out_times,
            coords,
            seed: PhasePoint(x.to_vec()),
            escaped: truncated,
        }
    }
}

impl FlowSpec {
    /// Visit `x^s` at `s = dt, 2dt, …` up to `span` without storing the
    /// orbit. The visitor returns `false` to stop. Returns the escape time if
    /// the orbit escaped.
    pub(crate) fn walk(
        &self,
        x: &[f64],
        span: f64,
        dt: f64,
        mut visit: impl FnMut(f64, &[f64]) -> bool,
    ) -> Option<f64> {
        let n = (span / dt).ceil().max(1.0) as usize;
        match &self.kind {
            FlowKind::ClosedForm { map, .. } => {
                let mut buf = vec![0.0; x.len()];
                for i in 1..=n {
                    let s = (i as f64 * dt).min(span);
                    map(s * self.orientation, x, &mut buf);
                    self.space.project(&mut buf);
                    if buf.iter().any(|v| !v.is_finite()) {
                        return Some(s);
                    }
                    if !visit(s, &buf) {
                        return None;
                    }
                }
                None
            }
            FlowKind::VectorField(f) => {
                let f = f.as_ref();
                let mut st = Stepper::new(&f, &self.space, self.integrator, self.orientation, x);
                for i in 1..=n {
                    let s = (i as f64 * dt).min(span);
                    if let Err(b) = st.advance_to(s) {
                        return Some(b.time);
                    }
                    if !visit(s, &st.x) {
                        return None;
                    }
                }
                None
            }
        }
    }
}

fn escape_time(e: &Error) -> f64 {
    match e {
        Error::Escape { time, .. } => *time,
        _ => f64::NAN,
    }
}

/// A time-ordered orbit sample. Coordinates are stored flat.
#[derive(Clone, Debug)]
pub struct OrbitSample {
    pub dim: usize,
    pub times: Vec<f64>,
    pub coords: Vec<f64>,
    pub seed: PhasePoint,
    /// Set when the orbit escaped; the sample stops before this time.
    pub escaped: Option<f64>,
}

impl OrbitSample {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.coords.chunks_exact(self.dim).last()
    }

    pub fn is_truncated(&self) -> bool {
        self.escaped.is_some()
    }

    /// CSV with columns `t, x0, x1, …`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.dim).map(|i| format!("x{i}")));
        wr.write_record(&header)?;
        for (t, p) in self.times.iter().zip(self.points()) {
            let mut row = vec![t.to_string()];
            row.extend(p.iter().map(|c| c.to_string()));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

//! Finite-scale Lyapunov stability, attractors, hyper-stability and
//! recurrence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compact::{hausdorff_distance, set_distance, CompactSetSample};
use crate::error::{Error, Result};
use crate::flow::FlowSpec;
use crate::index::PointIndex;
use crate::limits::{omega_limit_detail, LimitParams};
use crate::minimal::{CMinSpace, MinimalSetRecord};
use crate::numeric::golden_min;
use crate::space::PhasePoint;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityParams {
    /// Decreasing shell radii.
    pub radii: Vec<f64>,
    pub kappa: f64,
    pub horizon: f64,
    pub shell_samples: usize,
    /// Interval between distance checks along each probe.
    pub dt: f64,
    pub seed: u64,
}

impl Default for StabilityParams {
    fn default() -> Self {
        Self {
            radii: geometric_radii(0.2, 4, 0.5),
            kappa: 3.0,
            horizon: 100.0,
            shell_samples: 24,
            dt: 0.05,
            seed: 0x5eed,
        }
    }
}

/// `count` radii starting at `r_max`, each `ratio` times the previous.
pub fn geometric_radii(r_max: f64, count: usize, ratio: f64) -> Vec<f64> {
    (0..count).map(|i| r_max * ratio.powi(i as i32)).collect()
}

impl StabilityParams {
    fn validate(&self) -> Result<()> {
        if self.radii.is_empty() || self.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::invalid("stability radii must be positive"));
        }
        if self.radii.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid(
                "stability radii must be strictly decreasing",
            ));
        }
        if !(self.kappa > 1.0) {
            return Err(Error::invalid(format!(
                "confine factor must exceed 1, got {}",
                self.kappa
            )));
        }
        if self.shell_samples < 20 {
            return Err(Error::invalid("at least 20 shell samples are required"));
        }
        if !(self.horizon > 0.0 && self.dt > 0.0) {
            return Err(Error::invalid("horizon and dt must be positive"));
        }
        Ok(())
    }

    fn r_max(&self) -> f64 {
        self.radii[0]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityKind {
    StableAtScale,
    UnstableWitnessed,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Witness {
    pub start: Vec<f64>,
    pub start_distance: f64,
    pub escape_time: f64,
    pub escape_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityVerdict {
    pub kind: StabilityKind,
    pub tested_radii: Vec<f64>,
    pub confine_factor: f64,
    pub horizon: f64,
    pub witness: Option<Witness>,
    /// Largest excursion seen from each tested shell, divided by its radius,
    /// in the order the shells were run (smallest first).
    pub excursion_ratios: Vec<f64>,
    pub probes_per_radius: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl StabilityVerdict {
    pub fn is_stable(&self) -> bool {
        self.kind == StabilityKind::StableAtScale
    }

    pub fn is_unstable(&self) -> bool {
        self.kind == StabilityKind::UnstableWitnessed
    }
}

/// Random points `p` with `d(p, Λ) ∈ [lo, hi]`, produced by perturbing
/// random net points.
fn sample_near(
    flow: &FlowSpec,
    lambda: &CompactSetSample,
    index: &PointIndex<'_>,
    lo: f64,
    hi: f64,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(Vec<f64>, f64)> {
    let d = flow.space.ambient_dim;
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count && attempts < 200 * count {
        attempts += 1;
        let q = lambda.point(rng.gen_range(0..lambda.len()));
        let dir: Vec<f64> = (0..d)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n == 0.0 {
            continue;
        }
        let len = if lo > 0.0 {
            rng.gen_range(lo..=1.5 * hi)
        } else {
            hi * rng.gen::<f64>().powf(1.0 / flow.space.dim as f64)
        };
        let mut p: Vec<f64> = q.iter().zip(&dir).map(|(a, u)| a + len * u / n).collect();
        flow.space.project(&mut p);
        if !flow.space.contains(&p) {
            continue;
        }
        let dist = index.nearest(&p).map(|(_, v)| v).unwrap_or(f64::INFINITY);
        if dist >= lo && dist <= hi {
            out.push((p, dist));
        }
    }
    out
}

enum Probe {
    /// Largest distance reached, never above the limit.
    Confined(f64),
    Exceeded {
        time: f64,
        distance: f64,
    },
    Failed,
}

fn run_probe(
    flow: &FlowSpec,
    index: &PointIndex<'_>,
    x: &[f64],
    horizon: f64,
    dt: f64,
    limit: f64,
) -> Probe {
    let mut max_d = 0.0f64;
    let mut hit = None;
    let escaped = flow.walk(x, horizon, dt, |t, p| {
        let d = index.nearest(p).map(|(_, v)| v).unwrap_or(f64::INFINITY);
        max_d = max_d.max(d);
        if d > limit {
            hit = Some((t, d));
            false
        } else {
            true
        }
    });
    match (hit, escaped) {
        (Some((time, distance)), _) => Probe::Exceeded { time, distance },
        (None, Some(_)) => Probe::Failed,
        (None, None) => Probe::Confined(max_d),
    }
}

fn rng_for(seed: u64, stream: u64, radius_index: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(
        stream
            .wrapping_mul(1 << 16)
            .wrapping_add(radius_index as u64),
    );
    r
}

/// Shell test of Lyapunov stability at the given scales.
///
/// Unstable is witnessed only from the smallest shell, by a probe that
/// leaves the `κ·r_max` neighbourhood. Stable at scale requires every probe
/// of every shell of radius `r` to stay within `κ·r` for the whole horizon.
/// `stream` selects the random stream (usually the record index).
pub fn test_stability(
    flow: &FlowSpec,
    lambda: &MinimalSetRecord,
    params: &StabilityParams,
    stream: u64,
) -> Result<StabilityVerdict> {
    params.validate()?;
    let sample = &lambda.sample;
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let index = sample.index();
    let mut verdict = StabilityVerdict {
        kind: StabilityKind::Undetermined,
        tested_radii: params.radii.clone(),
        confine_factor: params.kappa,
        horizon: params.horizon,
        witness: None,
        excursion_ratios: vec![],
        probes_per_radius: vec![],
        reason: None,
    };
    let k = params.kappa;
    let n = params.radii.len();
    for (ri, &r) in params.radii.iter().enumerate().rev() {
        let mut rng = rng_for(params.seed, stream, ri);
        let starts = sample_near(
            flow,
            sample,
            &index,
            r / 2.0,
            r,
            params.shell_samples,
            &mut rng,
        );
        verdict.probes_per_radius.push(starts.len());
        if starts.is_empty() {
            verdict.reason = Some(format!("no shell points found at radius {r}"));
            return Ok(verdict);
        }
        let smallest = ri == n - 1;
        let limit = if smallest { k * params.r_max() } else { k * r };
        let results: Vec<Probe> = starts
            .par_iter()
            .map(|(x, _)| run_probe(flow, &index, x, params.horizon, params.dt, limit))
            .collect();
        let mut worst = 0.0f64;
        for ((x, d0), res) in starts.iter().zip(&results) {
            match *res {
                Probe::Exceeded { time, distance } => {
                    if smallest {
                        verdict.kind = StabilityKind::UnstableWitnessed;
                        verdict.witness = Some(Witness {
                            start: x.clone(),
                            start_distance: *d0,
                            escape_time: time,
                            escape_distance: distance,
                        });
                        verdict.excursion_ratios.push(distance / r);
                    } else {
                        verdict.excursion_ratios.push(distance / r);
                        verdict.reason = Some(format!("probe left {k}·r at radius {r}"));
                    }
                    return Ok(verdict);
                }
                Probe::Failed => {
                    verdict.reason = Some(format!("integration failed at radius {r}"));
                    return Ok(verdict);
                }
                Probe::Confined(m) => worst = worst.max(m),
            }
        }
        verdict.excursion_ratios.push(worst / r);
        if worst > k * r {
            verdict.reason = Some(format!(
                "excursion {worst:.3e} exceeds {k}·r at radius {r} without escaping {k}·r_max"
            ));
            return Ok(verdict);
        }
    }
    verdict.kind = StabilityKind::StableAtScale;
    Ok(verdict)
}

/// Stability of the time-reversed flow.
pub fn test_minus_stability(
    flow: &FlowSpec,
    lambda: &MinimalSetRecord,
    params: &StabilityParams,
    stream: u64,
) -> Result<StabilityVerdict> {
    test_stability(&flow.reversed(), lambda, params, stream)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttractorParams {
    pub radius: f64,
    pub basin_samples: usize,
    /// Burn-in before the limit estimate of each basin sample.
    pub horizon: f64,
    pub window: f64,
    pub dt: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttractorReport {
    /// `None` when too many integrations failed to decide.
    pub is_attractor: Option<bool>,
    pub fraction: f64,
    pub converging: Vec<PhasePoint>,
    pub non_converging: Vec<PhasePoint>,
    pub failed: usize,
}

/// Whether at least 95% of sampled points in `B(Λ, radius)` have limit
/// estimates within `3·resolution` of `Λ`. Intended for records that already
/// test stable at scale.
pub fn test_attractor(
    flow: &FlowSpec,
    lambda: &MinimalSetRecord,
    params: &AttractorParams,
    stream: u64,
) -> Result<AttractorReport> {
    if params.basin_samples == 0 || !(params.radius > 0.0) {
        return Err(Error::invalid(
            "attractor test needs a positive radius and sample count",
        ));
    }
    let sample = &lambda.sample;
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let res = sample.resolution;
    let index = sample.index();
    let mut rng = rng_for(params.seed, stream, usize::MAX >> 1);
    let starts = sample_near(
        flow,
        sample,
        &index,
        0.0,
        params.radius,
        params.basin_samples,
        &mut rng,
    );
    let limit = LimitParams {
        burn_in: params.horizon,
        window: params.window,
        dt: params.dt,
        net_eps: res,
    };
    let outcomes: Vec<Option<bool>> = starts
        .par_iter()
        .map(|(x, _)| {
            let est = omega_limit_detail(flow, x, &limit).ok()?;
            if est.net.is_empty() {
                return None;
            }
            hausdorff_distance(&est.net, sample)
                .ok()
                .map(|d| d <= 3.0 * res)
        })
        .collect();
    let mut report = AttractorReport {
        is_attractor: None,
        fraction: 0.0,
        converging: vec![],
        non_converging: vec![],
        failed: 0,
    };
    for ((x, _), o) in starts.iter().zip(outcomes) {
        match o {
            Some(true) => report.converging.push(PhasePoint(x.clone())),
            Some(false) => report.non_converging.push(PhasePoint(x.clone())),
            None => report.failed += 1,
        }
    }
    let decided = report.converging.len() + report.non_converging.len();
    if decided == 0 || report.failed * 10 > starts.len() {
        return Ok(report);
    }
    report.fraction = report.converging.len() as f64 / decided as f64;
    report.is_attractor = Some(report.fraction >= 0.95);
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HyperKind {
    HyperStableAtScale,
    #[serde(rename = "cl_H(U)-member")]
    ClosureMember,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperVerdict {
    pub record: String,
    pub kind: HyperKind,
    pub radius: f64,
    /// Unstable records meeting `B(Λ, radius)`.
    pub offending: Vec<String>,
    /// Records of undetermined stability meeting the ball.
    #[serde(default)]
    pub undetermined_near: Vec<String>,
}

/// Hyper-stability at scale: no unstable record meets `B(Λ, radius)`.
///
/// `verdicts[i]` is the stability verdict of `space.records[i]`.
pub fn classify_hyper_stability(
    space: &CMinSpace,
    verdicts: &[StabilityVerdict],
    id: &str,
    radius: f64,
) -> Result<HyperVerdict> {
    if verdicts.len() != space.len() {
        return Err(Error::invalid(format!(
            "{} verdicts for {} records",
            verdicts.len(),
            space.len()
        )));
    }
    let li = space.index_of(id)?;
    let lambda = &space.records[li].sample;
    let mut offending = vec![];
    let mut undetermined_near = vec![];
    for (r, v) in space.records.iter().zip(verdicts) {
        if v.is_stable() {
            continue;
        }
        if set_distance(&r.sample, lambda)? < radius {
            if v.is_unstable() {
                offending.push(r.id.clone());
            } else {
                undetermined_near.push(r.id.clone());
            }
        }
    }
    let kind = if !offending.is_empty() {
        HyperKind::ClosureMember
    } else if !undetermined_near.is_empty() {
        HyperKind::Undetermined
    } else {
        HyperKind::HyperStableAtScale
    };
    Ok(HyperVerdict {
        record: id.to_string(),
        kind,
        radius,
        offending,
        undetermined_near,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecurrenceReport {
    pub fraction: f64,
    pub recurrent: usize,
    pub tested: usize,
    /// Indices of seeds whose integration failed (excluded from `tested`).
    pub failed: Vec<usize>,
}

/// Fraction of seeds `x` with `min_{t∈[1,horizon]} d(x^t, x) < δ`.
///
/// The orbit is sampled every `dt`; sampled local minima that could dip
/// below `δ` are refined by golden-section search.
pub fn recurrence_fraction(
    flow: &FlowSpec,
    seeds: &[PhasePoint],
    horizon: f64,
    delta: f64,
    dt: f64,
) -> Result<RecurrenceReport> {
    if !(horizon >= 1.0) || !(delta > 0.0) || !(dt > 0.0) {
        return Err(Error::invalid(
            "recurrence needs horizon >= 1, δ > 0 and dt > 0",
        ));
    }
    let outcomes: Vec<Option<bool>> = seeds
        .par_iter()
        .map(|s| {
            flow.space.check(s.coords()).ok()?;
            recurs(flow, s.coords(), horizon, delta, dt)
        })
        .collect();
    let mut report = RecurrenceReport {
        fraction: 0.0,
        recurrent: 0,
        tested: 0,
        failed: vec![],
    };
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Some(r) => {
                report.tested += 1;
                report.recurrent += r as usize;
            }
            None => report.failed.push(i),
        }
    }
    if report.tested == 0 {
        return Err(Error::invalid("no seed could be integrated"));
    }
    report.fraction = report.recurrent as f64 / report.tested as f64;
    Ok(report)
}

fn recurs(flow: &FlowSpec, x: &[f64], horizon: f64, delta: f64, dt: f64) -> Option<bool> {
    let space = &flow.space;
    let mut hist: Vec<(f64, f64, Vec<f64>)> = vec![(0.0, 0.0, x.to_vec())];
    let mut found = false;
    let escaped = flow.walk(x, horizon, dt, |t, p| {
        let d = space.distance(p, x);
        if t >= 1.0 && d < delta {
            found = true;
            return false;
        }
        if hist.len() == 2 {
            let (t0, d0, ref s0) = hist[0];
            let (_, d1, ref s1) = hist[1];
            let step = space.distance(s0, s1).max(space.distance(s1, p));
            if t >= 1.0 && d1 <= d0 && d1 <= d && d1 - step < delta {
                let (a, base_t, base) = if t0 >= 1.0 {
                    (t0, t0, s0.clone())
                } else {
                    let b = flow.advance_raw(s0, 1.0 - t0).ok();
                    match b {
                        Some(b) => (1.0, 1.0, b),
                        None => (t0, t0, s0.clone()),
                    }
                };
                let (_, m) = golden_min(
                    |s| {
                        flow.advance_raw(&base, s - base_t)
                            .map(|y| space.distance_sq(&y, x))
                            .unwrap_or(f64::INFINITY)
                    },
                    a,
                    t,
                    1e-10 * t.max(1.0),
                );
                if m.sqrt() < delta {
                    found = true;
                    return false;
                }
            }
            hist.remove(0);
        }
        hist.push((t, d, p.to_vec()));
        true
    });
    if escaped.is_some() && !found {
        return None;
    }
    Some(found)
}

//! Detection, classification and harvesting of compact minimal sets.

use std::io::Write;

use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compact::{
    directed_hausdorff, epsilon_net_flat, hausdorff_below, hausdorff_distance, CompactSetSample,
    SampleFlag,
};
use crate::error::{Error, Result};
use crate::flow::FlowSpec;
use crate::index::PointIndex;
use crate::limits::{omega_limit_detail, LimitParams};
use crate::numeric::golden_min;
use crate::space::{PhasePoint, PhaseSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Structure {
    Equilibrium,
    Periodic,
    QuasiperiodicTorus,
    Unresolved,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectParams {
    pub burn_in: f64,
    pub window: f64,
    pub dt: f64,
    /// Net resolution of every sample.
    pub resolution: f64,
    pub probes: usize,
    pub threshold: f64,
    /// How far ahead to look for a first return.
    pub period_horizon: f64,
    /// A refined return closer than this counts as closure.
    pub closure_tol: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            burn_in: 50.0,
            window: 50.0,
            dt: 0.01,
            resolution: 0.05,
            probes: 5,
            threshold: 0.9,
            period_horizon: 50.0,
            closure_tol: 1e-5,
        }
    }
}

impl DetectParams {
    pub fn limit(&self) -> LimitParams {
        LimitParams {
            burn_in: self.burn_in,
            window: self.window,
            dt: self.dt,
            net_eps: self.resolution,
        }
    }

    fn validate(&self) -> Result<()> {
        self.limit().validate()?;
        if self.probes == 0 || !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::invalid(
                "probes must be positive and threshold in [0, 1]",
            ));
        }
        if !(self.period_horizon > 0.0 && self.closure_tol > 0.0) {
            return Err(Error::invalid(
                "period_horizon and closure_tol must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimalSetRecord {
    pub id: String,
    pub sample: CompactSetSample,
    pub structure: Structure,
    pub period: Option<f64>,
    pub minimality_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation_dimension: Option<f64>,
    pub seeds: Vec<PhasePoint>,
}

/// Result of [`classify_structure`].
#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub structure: Structure,
    pub period: Option<f64>,
    pub correlation_dimension: Option<f64>,
}

/// Tag a converged limit sample as equilibrium, periodic, quasi-periodic
/// torus, or unresolved.
pub fn classify_structure(
    flow: &FlowSpec,
    sample: &CompactSetSample,
    params: &DetectParams,
) -> Classification {
    let none = |structure| Classification {
        structure,
        period: None,
        correlation_dimension: None,
    };
    if sample.is_empty() {
        return none(Structure::Unresolved);
    }
    if sample.len() == 1 {
        return if flow.is_fixed_point(sample.point(0)) {
            none(Structure::Equilibrium)
        } else {
            none(Structure::Unresolved)
        };
    }
    let ret = first_return(flow, sample.point(0), params);
    if let Some(p) = ret.period {
        return Classification {
            structure: Structure::Periodic,
            period: Some(p),
            correlation_dimension: None,
        };
    }
    let dim = correlation_dimension(sample);
    let torus = ret.near_returns > 0 && dim.is_some_and(|d| (1.5..=2.5).contains(&d));
    Classification {
        structure: if torus {
            Structure::QuasiperiodicTorus
        } else {
            Structure::Unresolved
        },
        period: None,
        correlation_dimension: dim,
    }
}

struct Return {
    period: Option<f64>,
    near_returns: usize,
}

/// Look for the first closed return of the orbit of `x`.
///
/// After the orbit leaves the `2·resolution` ball around `x`, every sampled
/// local minimum of `d(x^t, x)` that may dip below `2·resolution` is refined by
/// golden-section search; the first refined minimum below `closure_tol` is
/// the period.
fn first_return(flow: &FlowSpec, x: &[f64], params: &DetectParams) -> Return {
    const MAX_CANDIDATES: usize = 400;
    let near = 2.0 * params.resolution;
    let space = &flow.space;
    let mut left = false;
    let mut near_returns = 0usize;
    let mut period = None;
    // (t, d, state) for the previous two samples
    let mut hist: Vec<(f64, f64, Vec<f64>)> = vec![(0.0, 0.0, x.to_vec())];
    let mut candidates = 0usize;
    flow.walk(x, params.period_horizon, params.dt, |t, p| {
        let d = space.distance(p, x);
        if !left {
            if d > near {
                left = true;
            }
            hist = vec![(t, d, p.to_vec())];
            return true;
        }
        if hist.len() == 2 {
            let (t0, d0, ref s0) = hist[0];
            let (t1, d1, ref s1) = hist[1];
            let step = space.distance(s0, s1).max(space.distance(s1, p));
            if d1 <= d0 && d1 < d && d1 - step < near {
                near_returns += 1;
                candidates += 1;
                let base = s0.clone();
                let (ts, dmin) = golden_min(
                    |s| {
                        flow.advance_raw(&base, s - t0)
                            .map(|y| space.distance_sq(&y, x))
                            .unwrap_or(f64::INFINITY)
                    },
                    t0,
                    t,
                    1e-9 * t1.max(1.0),
                );
                let dmin = dmin.sqrt();
                debug!("return candidate t={ts:.9} d={dmin:.3e}");
                if dmin <= params.closure_tol {
                    period = Some(ts);
                    return false;
                }
                if candidates >= MAX_CANDIDATES {
                    return false;
                }
            }
            hist.remove(0);
        }
        hist.push((t, d, p.to_vec()));
        true
    });
    Return {
        period,
        near_returns,
    }
}

/// Slope of the correlation sum of the net between `2·res` and `4·res`.
///
/// Neighbours are counted among all net points around at most 1000
/// reference points drawn with a fixed generator, so that the estimate does
/// not depend on the orbit order of the net.
pub fn correlation_dimension(sample: &CompactSetSample) -> Option<f64> {
    const MAX_CENTRES: usize = 1000;
    let n = sample.len();
    if n < 10 || sample.resolution <= 0.0 {
        return None;
    }
    let centres: Vec<usize> = if n <= MAX_CENTRES {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        rand::seq::index::sample(&mut rng, n, MAX_CENTRES).into_vec()
    };
    let r1 = 2.0 * sample.resolution;
    let r2 = 4.0 * sample.resolution;
    let index = PointIndex::new(&sample.space, sample.coords(), r2);
    let (c1, c2) = centres
        .iter()
        .map(|&i| {
            let p = sample.point(i);
            (index.count_closer(p, r1) - 1, index.count_closer(p, r2) - 1)
        })
        .fold((0usize, 0usize), |a, b| (a.0 + b.0, a.1 + b.1));
    if c1 == 0 {
        return None;
    }
    Some((c2 as f64 / c1 as f64).ln() / (r2 / r1).ln())
}

/// Estimate the minimal set that the orbit of `seed` accumulates on.
pub fn detect_minimal_set(
    flow: &FlowSpec,
    seed: &PhasePoint,
    params: &DetectParams,
) -> Result<MinimalSetRecord> {
    params.validate()?;
    flow.space.check(seed.coords())?;
    let res = params.resolution;
    let record = |sample: CompactSetSample, c: Classification, score: f64| MinimalSetRecord {
        id: String::new(),
        sample,
        structure: if score < params.threshold {
            Structure::Unresolved
        } else {
            c.structure
        },
        period: if score < params.threshold {
            None
        } else {
            c.period
        },
        minimality_score: score,
        correlation_dimension: c.correlation_dimension,
        seeds: vec![seed.clone()],
    };
    if flow.is_fixed_point(seed.coords()) {
        let s = CompactSetSample::singleton(flow.space.clone(), res, seed.coords())
            .with_flag(SampleFlag::Converged);
        let c = Classification {
            structure: Structure::Equilibrium,
            period: None,
            correlation_dimension: None,
        };
        return Ok(record(s, c, 1.0));
    }
    let est = omega_limit_detail(flow, seed.coords(), &params.limit())?;
    if est.net.has(SampleFlag::Escaped) {
        return Err(Error::Escape {
            time: f64::NAN,
            last_state: seed.coords().to_vec(),
        });
    }
    let mut net = est.net;
    if net.len() == 1 {
        if let Some(last) = est.last {
            let flags = net.flags.clone();
            net = CompactSetSample::singleton(flow.space.clone(), res, &last);
            net.flags = flags;
        }
    }
    let c = classify_structure(flow, &net, params);
    let score = if net.len() == 1 {
        1.0
    } else {
        minimality_score(flow, &net, params)
    };
    Ok(record(net, c, score))
}

/// Fraction of `k` probe points whose forward orbit over the window comes
/// within `2·resolution` of every net point.
fn minimality_score(flow: &FlowSpec, net: &CompactSetSample, params: &DetectParams) -> f64 {
    let k = params.probes;
    let n = net.len();
    let covered = (0..k)
        .filter(|j| {
            let p = net.point(j * n / k);
            let orbit = flow.orbit_from(p, 0.0, params.window, params.dt);
            if orbit.is_truncated() || orbit.is_empty() {
                return false;
            }
            let Ok(probe_net) = epsilon_net_flat(&flow.space, &orbit.coords, params.resolution)
            else {
                return false;
            };
            directed_hausdorff(net, &probe_net).is_ok_and(|d| d <= 2.0 * params.resolution)
        })
        .count();
    covered as f64 / k as f64
}

/// Symmetric matrix of pairwise Hausdorff distances.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| ((i + 1)..n).map(|j| f(i, j)).collect())
            .collect();
        let mut data = vec![0.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (k, v) in row.into_iter().enumerate() {
                let j = i + 1 + k;
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.n.max(1))
            .map(|r| r.to_vec())
            .collect()
    }
}

impl Serialize for DistanceMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DistanceMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(D::Error::custom(format!(
                    "row {i} has length {}, expected {n}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(D::Error::custom(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..i {
                if data[i * n + j] != data[j * n + i] {
                    return Err(D::Error::custom(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { n, data })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RejectedSeed {
    pub seed: PhasePoint,
    pub reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimality_score: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarvestParams {
    pub detect: DetectParams,
    /// Records closer than this in `d_H` are merged. Defaults to 4× resolution.
    pub dedup_eps: Option<f64>,
    /// Seed-grid spacing in record space; sets the topology scales.
    /// Defaults to `dedup_eps`.
    pub mesh: Option<f64>,
}

impl HarvestParams {
    pub fn dedup_eps(&self) -> f64 {
        self.dedup_eps.unwrap_or(4.0 * self.detect.resolution)
    }

    pub fn mesh(&self) -> f64 {
        self.mesh.unwrap_or_else(|| self.dedup_eps())
    }
}

/// The harvested finite metric space `[CMin, d_H]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CMinSpace {
    pub flow: String,
    pub space: PhaseSpace,
    pub resolution: f64,
    pub dedup_eps: f64,
    pub mesh: f64,
    pub records: Vec<MinimalSetRecord>,
    pub dmatrix: DistanceMatrix,
    #[serde(default)]
    pub rejected: Vec<RejectedSeed>,
}

impl CMinSpace {
    /// Build from already-detected records, numbering them and filling the
    /// distance matrix.
    pub fn from_records(
        flow: impl Into<String>,
        space: PhaseSpace,
        resolution: f64,
        dedup_eps: f64,
        mesh: f64,
        mut records: Vec<MinimalSetRecord>,
    ) -> Result<Self> {
        for (i, r) in records.iter_mut().enumerate() {
            r.id = record_id(i);
        }
        let dmatrix = DistanceMatrix::from_fn(records.len(), |i, j| {
            hausdorff_distance(&records[i].sample, &records[j].sample).unwrap_or(f64::NAN)
        });
        if dmatrix.data.iter().any(|v| v.is_nan()) {
            return Err(Error::EmptySample);
        }
        Ok(Self {
            flow: flow.into(),
            space,
            resolution,
            dedup_eps,
            mesh,
            records,
            dmatrix,
            rejected: vec![],
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.records
            .iter()
            .position(|r| r.id == id)
            .ok_or_else(|| Error::UnknownRecord(id.to_string()))
    }

    pub fn ids(&self) -> Vec<&str> {
        self.records.iter().map(|r| r.id.as_str()).collect()
    }

    /// Recompute `samples` matrix entries and return the worst discrepancy.
    pub fn spot_check(&self, pairs: &[(usize, usize)]) -> Result<f64> {
        let mut worst = 0.0f64;
        for &(i, j) in pairs {
            let d = hausdorff_distance(&self.records[i].sample, &self.records[j].sample)?;
            worst = worst.max((d - self.dmatrix.get(i, j)).abs());
        }
        Ok(worst)
    }

    /// Distance matrix as CSV with a header row of record ids.
    pub fn write_dmatrix_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["id".to_string()];
        header.extend(self.records.iter().map(|r| r.id.clone()));
        wr.write_record(&header)?;
        for (i, r) in self.records.iter().enumerate() {
            let mut row = vec![r.id.clone()];
            row.extend(self.dmatrix.row(i).iter().map(|v| v.to_string()));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub fn record_id(i: usize) -> String {
    format!("R{i:03}")
}

/// Detect from every seed in parallel, then merge near-duplicates in grid
/// order and fill the distance matrix.
pub fn harvest_cmin(
    flow: &FlowSpec,
    seeds: &[PhasePoint],
    params: &HarvestParams,
) -> Result<CMinSpace> {
    if seeds.is_empty() {
        return Err(Error::invalid("seed grid is empty"));
    }
    params.detect.validate()?;
    let dedup = params.dedup_eps();
    let detected: Vec<Result<MinimalSetRecord>> = seeds
        .par_iter()
        .map(|s| detect_minimal_set(flow, s, &params.detect))
        .collect();

    let mut records: Vec<MinimalSetRecord> = Vec::new();
    let mut rejected = Vec::new();
    for (seed, outcome) in seeds.iter().zip(detected) {
        let rec = match outcome {
            Ok(r) => r,
            Err(e) => {
                warn!("seed {:?}: {e}", seed.coords());
                rejected.push(RejectedSeed {
                    seed: seed.clone(),
                    reason: e.to_string(),
                    minimality_score: None,
                });
                continue;
            }
        };
        if rec.minimality_score < params.detect.threshold || !rec.sample.has(SampleFlag::Converged)
        {
            let reason = if rec.sample.has(SampleFlag::Converged) {
                "minimality score below threshold"
            } else {
                "limit estimate did not converge"
            };
            debug!("seed {:?}: {reason}", seed.coords());
            rejected.push(RejectedSeed {
                seed: seed.clone(),
                reason: reason.into(),
                minimality_score: Some(rec.minimality_score),
            });
            continue;
        }
        let mut merged = false;
        for existing in records.iter_mut() {
            if hausdorff_below(&rec.sample, &existing.sample, dedup)? {
                existing.seeds.push(seed.clone());
                if rec.minimality_score > existing.minimality_score {
                    let seeds = std::mem::take(&mut existing.seeds);
                    *existing = MinimalSetRecord {
                        seeds,
                        ..rec.clone()
                    };
                }
                merged = true;
                break;
            }
        }
        if !merged {
            records.push(rec);
        }
    }
    let mut space = CMinSpace::from_records(
        flow.name.clone(),
        flow.space.clone(),
        params.detect.resolution,
        dedup,
        params.mesh(),
        records,
    )?;
    space.rejected = rejected;
    Ok(space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn rotation() -> FlowSpec {
        FlowSpec::from_map(
            "rot",
            PhaseSpace::euclidean(2),
            |t, x, o| {
                let (s, c) = t.sin_cos();
                o[0] = c * x[0] - s * x[1];
                o[1] = s * x[0] + c * x[1];
            },
            Some(std::sync::Arc::new(|x: &[f64], v: &mut [f64]| {
                v[0] = -x[1];
                v[1] = x[0];
            })),
        )
    }

    fn params() -> DetectParams {
        DetectParams {
            burn_in: 1.0,
            window: 15.0,
            dt: 0.01,
            resolution: 0.05,
            period_horizon: 10.0,
            ..DetectParams::default()
        }
    }

    #[test]
    fn rotation_orbits_are_periodic() {
        let f = rotation();
        let r = detect_minimal_set(&f, &PhasePoint::new(vec![0.7, 0.0]), &params()).unwrap();
        assert_eq!(r.structure, Structure::Periodic);
        assert!((r.period.unwrap() - TAU).abs() < 1e-8);
        assert_eq!(r.minimality_score, 1.0);
    }

    #[test]
    fn centre_is_an_equilibrium() {
        let f = rotation();
        let r = detect_minimal_set(&f, &PhasePoint::new(vec![0.0, 0.0]), &params()).unwrap();
        assert_eq!(r.structure, Structure::Equilibrium);
        assert_eq!(r.sample.len(), 1);
    }

    #[test]
    fn harvest_merges_duplicates() {
        let f = rotation();
        let seeds: Vec<PhasePoint> = [0.5, 0.0, 0.501, 1.0, -0.5]
            .iter()
            .map(|&r| PhasePoint::new(vec![r, 0.0]))
            .collect();
        let hp = HarvestParams {
            detect: params(),
            ..HarvestParams::default()
        };
        let s = harvest_cmin(&f, &seeds, &hp).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.records[0].seeds.len(), 3);
        assert_eq!(s.records[1].structure, Structure::Equilibrium);
        assert_eq!(s.ids(), vec!["R000", "R001", "R002"]);
        assert!((s.dmatrix.get(0, 2) - 0.5).abs() < 0.05);
        assert!(s.spot_check(&[(0, 1), (1, 2)]).unwrap() == 0.0);
        let mut csv = Vec::new();
        s.write_dmatrix_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv)
            .unwrap()
            .starts_with("id,R000,R001,R002\n"));
        let j = serde_json::to_string(&s).unwrap();
        let back: CMinSpace = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn empty_grid_is_rejected() {
        assert!(harvest_cmin(&rotation(), &[], &HarvestParams::default()).is_err());
    }
}

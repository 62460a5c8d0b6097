//! Finite samples of compact sets and the Hausdorff metric between them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{GrowingIndex, PointIndex, MAX_INDEX_DIM};
use crate::space::{PhasePoint, PhaseSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleFlag {
    Converged,
    Escaped,
    Truncated,
}

/// An ε-net standing in for a compact subset of phase space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "SampleWire", try_from = "SampleWire")]
pub struct CompactSetSample {
    pub space: PhaseSpace,
    pub resolution: f64,
    pub flags: BTreeSet<SampleFlag>,
    coords: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleWire {
    space: PhaseSpace,
    resolution: f64,
    flags: BTreeSet<SampleFlag>,
    points: Vec<Vec<f64>>,
}

impl From<CompactSetSample> for SampleWire {
    fn from(s: CompactSetSample) -> Self {
        let points = s.points().map(|p| p.to_vec()).collect();
        SampleWire {
            space: s.space,
            resolution: s.resolution,
            flags: s.flags,
            points,
        }
    }
}

impl TryFrom<SampleWire> for CompactSetSample {
    type Error = String;

    fn try_from(w: SampleWire) -> std::result::Result<Self, String> {
        let d = w.space.ambient_dim;
        let mut coords = Vec::with_capacity(w.points.len() * d);
        for (i, p) in w.points.iter().enumerate() {
            if p.len() != d {
                return Err(format!(
                    "point {i} has {} coordinates, expected {d}",
                    p.len()
                ));
            }
            coords.extend_from_slice(p);
        }
        if !(w.resolution >= 0.0) {
            return Err("resolution must be non-negative".into());
        }
        Ok(Self {
            space: w.space,
            resolution: w.resolution,
            flags: w.flags,
            coords,
        })
    }
}

impl CompactSetSample {
    /// Wrap flat ambient coordinates without thinning.
    pub fn from_coords(space: PhaseSpace, resolution: f64, coords: Vec<f64>) -> Self {
        assert_eq!(coords.len() % space.ambient_dim, 0);
        Self {
            space,
            resolution,
            flags: BTreeSet::new(),
            coords,
        }
    }

    pub fn from_points<P: AsRef<[f64]>>(space: PhaseSpace, resolution: f64, points: &[P]) -> Self {
        let coords = points
            .iter()
            .flat_map(|p| p.as_ref().iter().copied())
            .collect();
        Self::from_coords(space, resolution, coords)
    }

    pub fn singleton(space: PhaseSpace, resolution: f64, p: &[f64]) -> Self {
        Self::from_coords(space, resolution, p.to_vec())
    }

    /// Empty sample flagged as escaped.
    pub fn escaped(space: PhaseSpace, resolution: f64) -> Self {
        let mut s = Self::from_coords(space, resolution, vec![]);
        s.flags.insert(SampleFlag::Escaped);
        s
    }

    pub fn with_flag(mut self, flag: SampleFlag) -> Self {
        self.flags.insert(flag);
        self
    }

    pub fn has(&self, flag: SampleFlag) -> bool {
        self.flags.contains(&flag)
    }

    /// Number of coordinates per point.
    pub fn ambient_dim(&self) -> usize {
        self.space.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.ambient_dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.ambient_dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.ambient_dim())
    }

    pub fn phase_points(&self) -> Vec<PhasePoint> {
        self.points().map(|p| PhasePoint(p.to_vec())).collect()
    }

    /// Grid index for repeated distance queries against this sample.
    pub fn index(&self) -> PointIndex<'_> {
        PointIndex::new(&self.space, &self.coords, index_cell(self, self))
    }

    /// `d(p, self)`.
    pub fn distance_to(&self, p: &[f64]) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(self
            .index()
            .nearest(p)
            .map(|(_, d)| d)
            .unwrap_or(f64::INFINITY))
    }
}

/// Available Hausdorff kernels; all return bit-identical values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HausdorffKernel {
    /// Plain double loop.
    Brute,
    /// Double loop that abandons a row once it cannot raise the maximum.
    EarlyBreak,
    /// Grid-bucket nearest-point queries.
    Grid,
}

fn check_pair(a: &CompactSetSample, b: &CompactSetSample) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    if a.space != b.space {
        return Err(Error::SpaceMismatch(
            a.space.name.clone(),
            b.space.name.clone(),
        ));
    }
    Ok(())
}

fn index_cell(a: &CompactSetSample, b: &CompactSetSample) -> f64 {
    let r = a.resolution.max(b.resolution);
    if r > 0.0 && r.is_finite() {
        return r;
    }
    // no declared resolution: pick a cell from the point density of `b`
    let d = b.ambient_dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in b.points() {
        for i in 0..d {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let extent = (0..d).map(|i| hi[i] - lo[i]).fold(0.0, f64::max);
    let n = b.len().max(1) as f64;
    (extent / n.powf(1.0 / d as f64)).max(1e-9)
}

fn directed_brute(space: &PhaseSpace, a: &CompactSetSample, b: &CompactSetSample) -> f64 {
    let mut cmax = 0.0f64;
    for p in a.points() {
        let mut cmin = f64::INFINITY;
        for q in b.points() {
            cmin = cmin.min(space.distance(p, q));
        }
        cmax = cmax.max(cmin);
    }
    cmax
}

fn directed_early(space: &PhaseSpace, a: &CompactSetSample, b: &CompactSetSample) -> f64 {
    let mut cmax = 0.0f64;
    for p in a.points() {
        let mut cmin = f64::INFINITY;
        let mut dominated = false;
        for q in b.points() {
            let d = space.distance(p, q);
            if d < cmax {
                dominated = true;
                break;
            }
            cmin = cmin.min(d);
        }
        if !dominated {
            cmax = cmax.max(cmin);
        }
    }
    cmax
}

fn directed_grid(space: &PhaseSpace, a: &CompactSetSample, index: &PointIndex<'_>) -> f64 {
    let mut cmax = 0.0f64;
    for p in a.points() {
        if cmax > 0.0 && index.any_closer(p, cmax) {
            continue;
        }
        if let Some((_, d)) = index.nearest(p) {
            cmax = cmax.max(d);
        }
    }
    let _ = space;
    cmax
}

/// `max_{a∈A} d(a, B)`.
pub fn directed_hausdorff(a: &CompactSetSample, b: &CompactSetSample) -> Result<f64> {
    check_pair(a, b)?;
    Ok(if use_grid(a, b) {
        let idx = PointIndex::new(&b.space, b.coords(), index_cell(a, b));
        directed_grid(&a.space, a, &idx)
    } else {
        directed_early(&a.space, a, b)
    })
}

fn use_grid(a: &CompactSetSample, b: &CompactSetSample) -> bool {
    a.ambient_dim() <= MAX_INDEX_DIM && a.len().saturating_mul(b.len()) > 4096
}

/// Hausdorff distance with an explicit kernel.
pub fn hausdorff_with(
    kernel: HausdorffKernel,
    a: &CompactSetSample,
    b: &CompactSetSample,
) -> Result<f64> {
    check_pair(a, b)?;
    let s = &a.space;
    Ok(match kernel {
        HausdorffKernel::Brute => directed_brute(s, a, b).max(directed_brute(s, b, a)),
        HausdorffKernel::EarlyBreak => directed_early(s, a, b).max(directed_early(s, b, a)),
        HausdorffKernel::Grid => {
            if a.ambient_dim() > MAX_INDEX_DIM {
                return hausdorff_with(HausdorffKernel::EarlyBreak, a, b);
            }
            let ib = PointIndex::new(s, b.coords(), index_cell(a, b));
            let ia = PointIndex::new(s, a.coords(), index_cell(b, a));
            directed_grid(s, a, &ib).max(directed_grid(s, b, &ia))
        }
    })
}

/// `d_H(A, B)`, exact on the samples.
pub fn hausdorff_distance(a: &CompactSetSample, b: &CompactSetSample) -> Result<f64> {
    check_pair(a, b)?;
    let kernel = if use_grid(a, b) {
        HausdorffKernel::Grid
    } else {
        HausdorffKernel::EarlyBreak
    };
    hausdorff_with(kernel, a, b)
}

/// Whether `d_H(A, B) < threshold`, stopping at the first witness against.
pub fn hausdorff_below(a: &CompactSetSample, b: &CompactSetSample, threshold: f64) -> Result<bool> {
    check_pair(a, b)?;
    let dirs = [(a, b), (b, a)];
    for (x, y) in dirs {
        if x.ambient_dim() > MAX_INDEX_DIM {
            let all = x
                .points()
                .all(|p| y.points().any(|q| x.space.distance(p, q) < threshold));
            if !all {
                return Ok(false);
            }
            continue;
        }
        let idx = PointIndex::new(
            &y.space,
            y.coords(),
            index_cell(x, y).max(threshold.min(1e300)),
        );
        if !x.points().all(|p| idx.any_closer(p, threshold)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `inf { d(a, b) : a ∈ A, b ∈ B }`.
pub fn set_distance(a: &CompactSetSample, b: &CompactSetSample) -> Result<f64> {
    check_pair(a, b)?;
    if !use_grid(a, b) {
        let mut best = f64::INFINITY;
        for p in a.points() {
            for q in b.points() {
                best = best.min(a.space.distance(p, q));
            }
        }
        return Ok(best);
    }
    // index the larger set
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let idx = PointIndex::new(&large.space, large.coords(), index_cell(small, large));
    let mut best = f64::INFINITY;
    for p in small.points() {
        if best.is_finite() && !idx.any_closer(p, best) {
            continue;
        }
        if let Some((_, d)) = idx.nearest(p) {
            best = best.min(d);
            if best == 0.0 {
                break;
            }
        }
    }
    Ok(best)
}

/// Greedy ε-net in input order: keep a point iff it is at distance `>= eps/2`
/// from every point kept so far.
pub fn epsilon_net<P: AsRef<[f64]>>(
    space: &PhaseSpace,
    points: &[P],
    eps: f64,
) -> Result<CompactSetSample> {
    let coords: Vec<f64> = points
        .iter()
        .flat_map(|p| p.as_ref().iter().copied())
        .collect();
    epsilon_net_flat(space, &coords, eps)
}

pub fn epsilon_net_flat(space: &PhaseSpace, coords: &[f64], eps: f64) -> Result<CompactSetSample> {
    let n = coords.len() / space.ambient_dim.max(1);
    Ok(epsilon_net_prefix(space, coords, eps, n)?.1)
}

/// Net of the whole input together with the net of its first `split` points.
///
/// The greedy pass visits points in order, so the prefix net is the state of
/// the full construction after `split` points.
pub fn epsilon_net_prefix(
    space: &PhaseSpace,
    coords: &[f64],
    eps: f64,
    split: usize,
) -> Result<(CompactSetSample, CompactSetSample)> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!(
            "net eps must be positive, got {eps}"
        )));
    }
    let d = space.ambient_dim;
    if coords.is_empty() {
        let e = CompactSetSample::escaped(space.clone(), eps);
        return Ok((e.clone(), e));
    }
    let r = eps / 2.0;
    let mut kept_at_split = None;
    let coords_out = if d <= MAX_INDEX_DIM {
        let mut g = GrowingIndex::new(space, r);
        for (i, p) in coords.chunks_exact(d).enumerate() {
            if i == split {
                kept_at_split = Some(g.len());
            }
            if !g.any_closer(p, r) {
                g.push(p);
            }
        }
        g.into_coords()
    } else {
        let mut kept: Vec<f64> = Vec::new();
        for (i, p) in coords.chunks_exact(d).enumerate() {
            if i == split {
                kept_at_split = Some(kept.len() / d);
            }
            if !kept.chunks_exact(d).any(|q| space.distance(p, q) < r) {
                kept.extend_from_slice(p);
            }
        }
        kept
    };
    let full_len = coords_out.len() / d;
    let k = kept_at_split.unwrap_or(full_len);
    let prefix = CompactSetSample::from_coords(space.clone(), eps, coords_out[..k * d].to_vec());
    let full = CompactSetSample::from_coords(space.clone(), eps, coords_out);
    Ok((prefix, full))
}

/// Whether every point of `a` lies within `r` of `center`.
pub fn contained_in_ball(a: &CompactSetSample, center: &CompactSetSample, r: f64) -> Result<bool> {
    Ok(directed_hausdorff(a, center)? <= r)
}

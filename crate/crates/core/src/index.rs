//! Uniform grid buckets for exact fixed-radius and nearest-point queries.
//!
//! A query at cell size `c` inspects the `3^d` block of cells around the
//! query point; every point outside that block is at distance `>= c`, so any
//! hit at distance `<= c` found in the block is the exact nearest point.
//! Nearest-point queries climb a ladder of cell sizes until that holds.

use rustc_hash::FxHashMap;

use crate::space::PhaseSpace;

/// Spaces with more ambient coordinates than this use brute force.
pub const MAX_INDEX_DIM: usize = 4;

type Key = [i64; MAX_INDEX_DIM];

#[derive(Clone, Debug)]
struct Axis {
    /// Cell width along this axis (`>= cell`).
    width: f64,
    /// Number of cells for periodic axes.
    wrap: Option<i64>,
    offset: f64,
}

/// One grid level.
#[derive(Clone, Debug)]
pub struct Grid {
    cell: f64,
    axes: Vec<Axis>,
    buckets: FxHashMap<Key, Vec<u32>>,
    offsets: Vec<Key>,
}

impl Grid {
    pub fn new(space: &PhaseSpace, cell: f64) -> Self {
        let d = space.ambient_dim;
        assert!(
            d <= MAX_INDEX_DIM,
            "grid index supports up to {MAX_INDEX_DIM} coordinates"
        );
        assert!(cell > 0.0 && cell.is_finite());
        let axes = (0..d)
            .map(|i| match space.period(i) {
                Some(p) => {
                    let n = ((p / cell).floor() as i64).max(1);
                    Axis {
                        width: p / n as f64,
                        wrap: Some(n),
                        offset: p / 2.0,
                    }
                }
                None => Axis {
                    width: cell,
                    wrap: None,
                    offset: 0.0,
                },
            })
            .collect::<Vec<_>>();
        let mut offsets = vec![[0i64; MAX_INDEX_DIM]];
        for ax in 0..d {
            let mut next = Vec::with_capacity(offsets.len() * 3);
            for o in &offsets {
                for delta in -1..=1 {
                    let mut k = *o;
                    k[ax] = delta;
                    next.push(k);
                }
            }
            offsets = next;
        }
        Self {
            cell,
            axes,
            buckets: FxHashMap::default(),
            offsets,
        }
    }

    pub fn cell(&self) -> f64 {
        self.cell
    }

    fn key(&self, p: &[f64]) -> Key {
        let mut k = [0i64; MAX_INDEX_DIM];
        for (i, ax) in self.axes.iter().enumerate() {
            let c = ((p[i] + ax.offset) / ax.width).floor() as i64;
            k[i] = match ax.wrap {
                Some(n) => c.rem_euclid(n),
                None => c,
            };
        }
        k
    }

    pub fn insert(&mut self, p: &[f64], idx: u32) {
        let k = self.key(p);
        self.buckets.entry(k).or_default().push(idx);
    }

    /// Visit candidate indices in the block around `p`, each at most once.
    fn for_block(&self, p: &[f64], mut visit: impl FnMut(u32) -> bool) {
        let base = self.key(p);
        let mut seen: [Key; 27] = [[i64::MIN; MAX_INDEX_DIM]; 27];
        let mut nseen = 0usize;
        let dedupe = self.axes.iter().any(|a| matches!(a.wrap, Some(n) if n < 3));
        for off in &self.offsets {
            let mut k = base;
            for (i, ax) in self.axes.iter().enumerate() {
                k[i] = match ax.wrap {
                    Some(n) => (base[i] + off[i]).rem_euclid(n),
                    None => base[i] + off[i],
                };
            }
            if dedupe {
                // only periodic axes with fewer than three cells can alias
                if seen[..nseen.min(27)].contains(&k) {
                    continue;
                }
                if nseen < 27 {
                    seen[nseen] = k;
                }
                nseen += 1;
            }
            if let Some(b) = self.buckets.get(&k) {
                for &i in b {
                    if !visit(i) {
                        return;
                    }
                }
            }
        }
    }
}

/// Read-only index over a flat coordinate buffer.
#[derive(Clone, Debug)]
pub struct PointIndex<'a> {
    space: &'a PhaseSpace,
    coords: &'a [f64],
    dim: usize,
    levels: Vec<Grid>,
}

impl<'a> PointIndex<'a> {
    /// Build with finest cell `cell`; coarser levels grow by a factor 4 up to
    /// `extent`.
    pub fn new(space: &'a PhaseSpace, coords: &'a [f64], cell: f64) -> Self {
        let dim = space.ambient_dim;
        let n = coords.len() / dim;
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in coords.chunks_exact(dim) {
            for i in 0..dim {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let extent = (0..dim)
            .map(|i| hi[i] - lo[i])
            .fold(0.0, f64::max)
            .max(cell);
        let mut levels = Vec::new();
        let mut c = cell;
        if dim <= MAX_INDEX_DIM {
            loop {
                let mut g = Grid::new(space, c);
                for i in 0..n {
                    g.insert(&coords[i * dim..(i + 1) * dim], i as u32);
                }
                levels.push(g);
                if c > extent {
                    break;
                }
                c *= 4.0;
            }
        }
        Self {
            space,
            coords,
            dim,
            levels,
        }
    }

    fn point(&self, i: u32) -> &[f64] {
        let i = i as usize;
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Nearest indexed point and its distance. Exact.
    pub fn nearest(&self, p: &[f64]) -> Option<(usize, f64)> {
        if self.is_empty() {
            return None;
        }
        for g in &self.levels {
            if let Some((i, d)) = self.block_min(g, p) {
                if d <= g.cell() {
                    return Some((i, d));
                }
            }
        }
        self.brute_nearest(p)
    }

    /// Nearest point within `r`, exact whenever the answer is `<= r`.
    pub fn nearest_within(&self, p: &[f64], r: f64) -> Option<(usize, f64)> {
        match self.level_for(r) {
            Some(g) => self.block_min(g, p),
            None => self.brute_nearest(p),
        }
        .filter(|&(_, d)| d <= r)
    }

    /// Whether some indexed point is at distance `< r`.
    pub fn any_closer(&self, p: &[f64], r: f64) -> bool {
        match self.level_for(r) {
            Some(g) => {
                let mut hit = false;
                g.for_block(p, |i| {
                    if self.space.distance(self.point(i), p) < r {
                        hit = true;
                        false
                    } else {
                        true
                    }
                });
                hit
            }
            None => self
                .coords
                .chunks_exact(self.dim)
                .any(|q| self.space.distance(q, p) < r),
        }
    }

    /// Number of indexed points at distance `< r`.
    pub fn count_closer(&self, p: &[f64], r: f64) -> usize {
        match self.level_for(r) {
            Some(g) => {
                let mut n = 0;
                g.for_block(p, |i| {
                    if self.space.distance(self.point(i), p) < r {
                        n += 1;
                    }
                    true
                });
                n
            }
            None => self
                .coords
                .chunks_exact(self.dim)
                .filter(|q| self.space.distance(q, p) < r)
                .count(),
        }
    }

    fn level_for(&self, r: f64) -> Option<&Grid> {
        self.levels.iter().find(|g| g.cell() >= r)
    }

    fn block_min(&self, g: &Grid, p: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        g.for_block(p, |i| {
            let d = self.space.distance(self.point(i), p);
            match best {
                Some((bi, bd)) if d > bd || (d == bd && i as usize > bi) => {}
                _ => best = Some((i as usize, d)),
            }
            true
        });
        best
    }

    fn brute_nearest(&self, p: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, q) in self.coords.chunks_exact(self.dim).enumerate() {
            let d = self.space.distance(q, p);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best
    }
}

/// Incremental single-level grid used while building nets.
pub struct GrowingIndex<'a> {
    space: &'a PhaseSpace,
    grid: Grid,
    coords: Vec<f64>,
}

impl<'a> GrowingIndex<'a> {
    pub fn new(space: &'a PhaseSpace, cell: f64) -> Self {
        Self {
            space,
            grid: Grid::new(space, cell),
            coords: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.space.ambient_dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Whether a stored point is at distance `< r` (requires `r <= cell`).
    pub fn any_closer(&self, p: &[f64], r: f64) -> bool {
        debug_assert!(r <= self.grid.cell());
        let dim = self.space.ambient_dim;
        let mut hit = false;
        self.grid.for_block(p, |i| {
            let i = i as usize;
            if self.space.distance(&self.coords[i * dim..(i + 1) * dim], p) < r {
                hit = true;
                false
            } else {
                true
            }
        });
        hit
    }

    pub fn push(&mut self, p: &[f64]) {
        let idx = self.len() as u32;
        self.grid.insert(p, idx);
        self.coords.extend_from_slice(p);
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nearest_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for space in [
            PhaseSpace::euclidean(2),
            PhaseSpace::cylinder(),
            PhaseSpace::solid_torus(),
        ] {
            let d = space.ambient_dim;
            let pts: Vec<f64> = (0..400 * d).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let idx = PointIndex::new(&space, &pts, 0.01);
            for _ in 0..200 {
                let q: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.9..0.9)).collect();
                let mut q = q;
                space.project(&mut q);
                let (_, got) = idx.nearest(&q).unwrap();
                let want = pts
                    .chunks_exact(d)
                    .map(|p| space.distance(p, &q))
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn periodic_axis_neighbours_wrap() {
        let space = PhaseSpace::cylinder();
        let pts = vec![0.499, 0.0];
        let idx = PointIndex::new(&space, &pts, 0.05);
        assert!(idx.any_closer(&[-0.499, 0.0], 0.01));
        let (_, d) = idx.nearest_within(&[-0.499, 0.0], 0.05).unwrap();
        assert!((d - 0.002).abs() < 1e-12);
    }
}

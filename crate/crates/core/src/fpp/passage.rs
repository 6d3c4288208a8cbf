use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lattice::{closest_vertex, Window};

use super::Configuration;

/// Default width, in translation layers, of the outer margin that flags
/// boundary-affected passage times.
pub const DEFAULT_MARGIN: i64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct PassageResult {
    pub source: usize,
    /// `T(source, v)`; `+∞` when `v` is unreachable inside the window.
    pub times: Vec<f64>,
    /// `true` when every optimal path from the source to `v` inside the
    /// window meets the margin (or `v` is unreachable).
    pub boundary_touched: Vec<bool>,
    pub margin: i64,
}

impl PassageResult {
    pub fn time(&self, v: usize) -> f64 {
        self.times[v]
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on time, then on id
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra over the window vertices accepted by `allowed`.
fn shortest_times(window: &Window, config: &Configuration, source: usize, allowed: impl Fn(usize) -> bool) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; window.vertex_count()];
    if !allowed(source) {
        return dist;
    }
    dist[source] = 0.0;
    let mut heap = BinaryHeap::from([Entry(0.0, source)]);
    while let Some(Entry(d, x)) = heap.pop() {
        if d > dist[x] {
            continue;
        }
        for a in window.neighbors(x) {
            if !allowed(a.to) {
                continue;
            }
            let nd = d + config.time(a.orbit);
            if nd < dist[a.to] {
                dist[a.to] = nd;
                heap.push(Entry(nd, a.to));
            }
        }
    }
    dist
}

fn check_config(window: &Window, config: &Configuration) -> Result<()> {
    if config.len() != window.orbit_count() {
        return Err(Error::Mismatch(format!(
            "configuration has {} times, window has {} edge orbits",
            config.len(),
            window.orbit_count()
        )));
    }
    Ok(())
}

pub fn passage_times(window: &Window, config: &Configuration, source: usize) -> Result<PassageResult> {
    passage_times_with_margin(window, config, source, DEFAULT_MARGIN)
}

pub fn passage_times_with_margin(window: &Window, config: &Configuration, source: usize, margin: i64) -> Result<PassageResult> {
    check_config(window, config)?;
    if source >= window.vertex_count() {
        return Err(Error::InvalidArgument(format!("source {source} is not a window vertex")));
    }
    let times = shortest_times(window, config, source, |_| true);
    // vertices reachable along tight edges without entering the margin
    let n = window.vertex_count();
    let mut clean = vec![false; n];
    if !window.in_margin(source, margin) {
        clean[source] = true;
        let mut queue = VecDeque::from([source]);
        while let Some(x) = queue.pop_front() {
            for a in window.neighbors(x) {
                let y = a.to;
                if !clean[y] && !window.in_margin(y, margin) && times[x] + config.time(a.orbit) <= times[y] {
                    clean[y] = true;
                    queue.push_back(y);
                }
            }
        }
    }
    let boundary_touched = clean.iter().map(|c| !c).collect();
    Ok(PassageResult { source, times, boundary_touched, margin })
}

/// A passage time with its boundary flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointPassage {
    pub time: f64,
    /// The value may be too large because the window is too small.
    pub flagged: bool,
    pub from: usize,
    pub to: usize,
}

/// `T(x', y')` for the closest window vertices `x'`, `y'` of `x` and `y`.
///
/// Shortest paths are computed from the smaller of the two vertex ids, so
/// the result is exactly symmetric in `x` and `y`.
pub fn passage_between_points(window: &Window, config: &Configuration, x: &[f64], y: &[f64]) -> Result<PointPassage> {
    let d = window.dim();
    if x.len() != d || y.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: if x.len() != d { x.len() } else { y.len() } });
    }
    let (a, b) = (closest_vertex(x, window), closest_vertex(y, window));
    let (s, t) = (a.min(b), a.max(b));
    let res = passage_times(window, config, s)?;
    let flagged = window.in_margin(s, DEFAULT_MARGIN) || res.boundary_touched[t];
    Ok(PointPassage { time: res.times[t], flagged, from: a, to: b })
}

/// The affine subspace `{p : N p = c}`, `N` with full row rank.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSubspace {
    normals: DMatrix<f64>,
    offsets: DVector<f64>,
    // N^T (N N^T)^{-1}
    pseudo_inverse: DMatrix<f64>,
}

impl AffineSubspace {
    pub fn new(normals: DMatrix<f64>, offsets: Vec<f64>) -> Result<Self> {
        if offsets.len() != normals.nrows() {
            return Err(Error::DimensionMismatch { expected: normals.nrows(), got: offsets.len() });
        }
        let gram = &normals * normals.transpose();
        let inv = gram
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("affine subspace normals are linearly dependent".into()))?;
        let pseudo_inverse = normals.transpose() * inv;
        Ok(Self { normals, offsets: DVector::from_vec(offsets), pseudo_inverse })
    }

    /// The hyperplane `{p : p_axis = value}`.
    pub fn coordinate_hyperplane(dim: usize, axis: usize, value: f64) -> Result<Self> {
        if axis >= dim {
            return Err(Error::InvalidArgument(format!("axis {axis} out of range for dimension {dim}")));
        }
        Self::new(DMatrix::from_fn(1, dim, |_, c| f64::from(c == axis)), vec![value])
    }

    pub fn ambient_dim(&self) -> usize {
        self.normals.ncols()
    }

    /// Euclidean distance from `p` to the subspace.
    pub fn distance(&self, p: &[f64]) -> f64 {
        let r = &self.normals * DVector::from_column_slice(p) - &self.offsets;
        (&self.pseudo_inverse * r).norm()
    }
}

/// `min T(x', y')` over non-margin window vertices `y'` realized within half
/// the minimal vertex spacing of the affine subspace.
pub fn passage_to_affine(window: &Window, config: &Configuration, x: &[f64], affine: &AffineSubspace) -> Result<PointPassage> {
    if affine.ambient_dim() != window.dim() || x.len() != window.dim() {
        return Err(Error::DimensionMismatch { expected: window.dim(), got: affine.ambient_dim() });
    }
    let source = closest_vertex(x, window);
    let res = passage_times(window, config, source)?;
    passage_to_affine_from(window, &res, affine)
}

/// As [`passage_to_affine`], reusing a computed single-source result.
pub fn passage_to_affine_from(window: &Window, res: &PassageResult, affine: &AffineSubspace) -> Result<PointPassage> {
    let snap = 0.5 * window.realization().min_spacing();
    let mut best: Option<PointPassage> = None;
    for y in 0..window.vertex_count() {
        if window.in_margin(y, res.margin) || affine.distance(window.point(y)) > snap {
            continue;
        }
        let cand = PointPassage { time: res.times[y], flagged: res.boundary_touched[y], from: res.source, to: y };
        let better = match best {
            None => true,
            Some(b) => cand.time < b.time || (cand.time == b.time && b.flagged && !cand.flagged),
        };
        if better {
            best = Some(cand);
        }
    }
    let mut best = best.ok_or(Error::EmptyAffineTarget)?;
    best.flagged |= window.in_margin(res.source, res.margin);
    Ok(best)
}

/// Passage time using only vertices with `|index|_∞ <= sub_radius`; `+∞`
/// when `y` cannot be reached that way, including when `x` or `y` lies
/// outside the sub-window.
pub fn restricted_passage(window: &Window, config: &Configuration, x: usize, y: usize, sub_radius: i64) -> Result<f64> {
    check_config(window, config)?;
    let Some(radius) = window.radius() else {
        return Err(Error::InvalidArgument("restricted passage needs a centred window".into()));
    };
    if sub_radius < 0 || sub_radius > radius {
        return Err(Error::InvalidArgument(format!("sub-window radius {sub_radius} not in 0..={radius}")));
    }
    if x >= window.vertex_count() || y >= window.vertex_count() {
        return Err(Error::InvalidArgument(format!("vertex {} is not a window vertex", x.max(y))));
    }
    if x == y {
        return Ok(0.0);
    }
    Ok(shortest_times(window, config, x, |v| window.within_radius(v, sub_radius))[y])
}

/// `B(t) = {v : T(source, v) <= t}`, ascending ids.
pub fn percolation_region(result: &PassageResult, t: f64) -> Vec<usize> {
    result.times.iter().enumerate().filter(|(_, &s)| s <= t).map(|(v, _)| v).collect()
}

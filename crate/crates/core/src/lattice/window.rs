//! Finite box truncations of a crystal lattice.
//!
//! Vertex ids enumerate `(translation index, base vertex)` in lexicographic
//! order, so `id = linear(index) * |V0| + base` and comparing ids compares
//! `(index, base)` lexicographically.

use crate::error::{Error, Result};
use crate::graph::{FiniteGraph, HalfEdge};

use super::{CrystalLattice, LatticeVertex, Realization};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowOptions {
    /// Refuse to instantiate windows with more vertices than this.
    pub max_vertices: usize,
}

impl Default for WindowOptions {
    fn default() -> Self {
        Self { max_vertices: 4_000_000 }
    }
}

/// An undirected edge of the window, stored as the directed half-edge
/// `tail -> head` lifted from `base_edge`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeOrbit {
    pub tail: usize,
    pub head: usize,
    pub base_edge: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Adjacent {
    pub to: usize,
    pub orbit: usize,
    pub base_edge: usize,
}

#[derive(Debug, Clone)]
pub struct Window {
    lattice: CrystalLattice,
    realization: Realization,
    lo: Vec<i64>,
    hi: Vec<i64>,
    // strides[i] = product of extents after axis i
    strides: Vec<usize>,
    n_base: usize,
    indices: Vec<i64>,
    coords: Vec<f64>,
    orbits: Vec<EdgeOrbit>,
    adj_start: Vec<usize>,
    adj: Vec<Adjacent>,
}

/// The window `[-R, R]^d`.
pub fn instantiate_window(lattice: &CrystalLattice, realization: &Realization, radius: i64) -> Result<Window> {
    Window::centered(lattice, realization, radius, WindowOptions::default())
}

impl Window {
    pub fn centered(
        lattice: &CrystalLattice,
        realization: &Realization,
        radius: i64,
        options: WindowOptions,
    ) -> Result<Self> {
        if radius < 0 {
            return Err(Error::InvalidArgument(format!("window radius {radius} is negative")));
        }
        let d = lattice.dim();
        Self::with_bounds(lattice, realization, vec![-radius; d], vec![radius; d], options)
    }

    /// The window over translation indices in the box `[lo, hi]`.
    pub fn with_bounds(
        lattice: &CrystalLattice,
        realization: &Realization,
        lo: Vec<i64>,
        hi: Vec<i64>,
        options: WindowOptions,
    ) -> Result<Self> {
        let d = lattice.dim();
        if realization.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: realization.dim() });
        }
        if realization.positions().len() != lattice.base().vertex_count() {
            return Err(Error::Mismatch("realization and lattice disagree on the base vertex count".into()));
        }
        if lo.len() != d || hi.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: lo.len().min(hi.len()) });
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::InvalidArgument(format!("empty window box {lo:?}..{hi:?}")));
        }
        let n_base = lattice.base().vertex_count();
        let mut count: usize = n_base;
        let mut extents = Vec::with_capacity(d);
        for (a, b) in lo.iter().zip(&hi) {
            let ext = usize::try_from(b - a + 1).map_err(|_| Error::WindowTooLarge { requested: usize::MAX, cap: options.max_vertices })?;
            extents.push(ext);
            count = count.checked_mul(ext).ok_or(Error::WindowTooLarge { requested: usize::MAX, cap: options.max_vertices })?;
        }
        if count > options.max_vertices {
            return Err(Error::WindowTooLarge { requested: count, cap: options.max_vertices });
        }
        let mut strides = vec![1usize; d];
        for i in (0..d.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * extents[i + 1];
        }

        let mut window = Self {
            lattice: lattice.clone(),
            realization: realization.clone(),
            lo,
            hi,
            strides,
            n_base,
            indices: Vec::with_capacity(count * d),
            coords: Vec::with_capacity(count * d),
            orbits: Vec::new(),
            adj_start: Vec::with_capacity(count + 1),
            adj: Vec::new(),
        };
        let cells = count / n_base;
        let mut index = window.lo.clone();
        for cell in 0..cells {
            if cell > 0 {
                // odometer increment, last axis fastest
                for i in (0..d).rev() {
                    if index[i] < window.hi[i] {
                        index[i] += 1;
                        break;
                    }
                    index[i] = window.lo[i];
                }
            }
            let shift = realization.translation(&index);
            for u in 0..n_base {
                window.indices.extend_from_slice(&index);
                window.coords.extend(realization.positions()[u].iter().zip(&shift).map(|(p, s)| p + s));
            }
        }
        window.build_edges();
        Ok(window)
    }

    fn build_edges(&mut self) {
        let base = self.lattice.base().clone();
        let n = self.vertex_count();
        let mut lists: Vec<Vec<Adjacent>> = vec![Vec::new(); n];
        for x in 0..n {
            let u = x % self.n_base;
            for &e in base.outgoing(u) {
                let Some(y) = self.step(x, e).ok() else { continue };
                let inv = base.inverse(e);
                let orbit = if (x, e) < (y, inv) {
                    self.orbits.push(EdgeOrbit { tail: x, head: y, base_edge: e });
                    self.orbits.len() - 1
                } else {
                    lists[y]
                        .iter()
                        .find(|a| a.base_edge == inv && a.to == x)
                        .map(|a| a.orbit)
                        .expect("partner half-edge enumerated earlier")
                };
                lists[x].push(Adjacent { to: y, orbit, base_edge: e });
            }
        }
        self.adj_start.push(0);
        for list in lists {
            self.adj.extend(list);
            self.adj_start.push(self.adj.len());
        }
    }

    pub fn lattice(&self) -> &CrystalLattice {
        &self.lattice
    }

    pub fn realization(&self) -> &Realization {
        &self.realization
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    /// `R` when the window is the centered box `[-R, R]^d`.
    pub fn radius(&self) -> Option<i64> {
        let r = self.hi.first().copied()?;
        (self.hi.iter().all(|&h| h == r) && self.lo.iter().all(|&l| l == -r)).then_some(r)
    }

    pub fn vertex_count(&self) -> usize {
        self.indices.len() / self.dim()
    }

    pub fn orbit_count(&self) -> usize {
        self.orbits.len()
    }

    pub fn orbits(&self) -> &[EdgeOrbit] {
        &self.orbits
    }

    pub fn base_of(&self, id: usize) -> usize {
        id % self.n_base
    }

    pub fn index_of(&self, id: usize) -> &[i64] {
        let d = self.dim();
        &self.indices[id * d..(id + 1) * d]
    }

    pub fn vertex(&self, id: usize) -> LatticeVertex {
        LatticeVertex { base: self.base_of(id), index: self.index_of(id).to_vec() }
    }

    /// Realized position `Φ(x)`.
    pub fn point(&self, id: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[id * d..(id + 1) * d]
    }

    pub fn contains_index(&self, index: &[i64]) -> bool {
        index.len() == self.lo.len() && index.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| a <= x && x <= b)
    }

    pub fn lookup(&self, base: usize, index: &[i64]) -> Option<usize> {
        if base >= self.n_base || !self.contains_index(index) {
            return None;
        }
        let cell: usize = index
            .iter()
            .zip(&self.lo)
            .zip(&self.strides)
            .map(|((x, a), s)| (x - a) as usize * s)
            .sum();
        Some(cell * self.n_base + base)
    }

    /// The vertex reached from `id` along the lift of base half-edge `e`.
    pub fn step(&self, id: usize, e: usize) -> Result<usize> {
        let base = self.lattice.base();
        if base.origin(e) != self.base_of(id) {
            return Err(Error::InvalidPath(format!(
                "half-edge {e} does not start at base vertex {}",
                self.base_of(id)
            )));
        }
        let (t, index) = self.lattice.step(self.index_of(id), e);
        self.lookup(t, &index).ok_or(Error::OutOfWindow { base: t, index })
    }

    /// Directed half-edges leaving `id` inside the window, by ascending base half-edge.
    pub fn neighbors(&self, id: usize) -> &[Adjacent] {
        &self.adj[self.adj_start[id]..self.adj_start[id + 1]]
    }

    /// Window vertices lying over base vertex `u`, ascending.
    pub fn fiber_of_base(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        (u..self.vertex_count()).step_by(self.n_base)
    }

    /// Whether `id` lies in the outer `width` translation layers.
    pub fn in_margin(&self, id: usize, width: i64) -> bool {
        self.index_of(id)
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .any(|(x, (a, b))| x - a < width || b - x < width)
    }

    /// Whether `|index|_∞ <= radius`.
    pub fn within_radius(&self, id: usize, radius: i64) -> bool {
        self.index_of(id).iter().all(|x| x.abs() <= radius)
    }

    /// The window as a finite graph: orbit `k` becomes half-edges `2k`
    /// (`tail -> head`) and `2k + 1`.
    pub fn to_graph(&self) -> FiniteGraph {
        let mut half_edges = Vec::with_capacity(2 * self.orbits.len());
        for (k, o) in self.orbits.iter().enumerate() {
            half_edges.push(HalfEdge { origin: o.tail, terminus: o.head, inverse: 2 * k + 1 });
            half_edges.push(HalfEdge { origin: o.head, terminus: o.tail, inverse: 2 * k });
        }
        FiniteGraph::from_half_edges(self.vertex_count(), half_edges).expect("window orbits are coherent")
    }

    /// Half-edge id in [`Window::to_graph`] for traversing `adjacent` from `from`.
    pub fn graph_half_edge(&self, from: usize, adjacent: &Adjacent) -> usize {
        let o = &self.orbits[adjacent.orbit];
        if o.tail == from && o.base_edge == adjacent.base_edge {
            2 * adjacent.orbit
        } else {
            2 * adjacent.orbit + 1
        }
    }
}

/// The Euclidean-nearest realized window vertex; ties go to the smallest
/// `(translation index, base vertex)`.
pub fn closest_vertex(point: &[f64], window: &Window) -> usize {
    let d = window.dim();
    let mut best = (f64::INFINITY, 0usize);
    for id in 0..window.vertex_count() {
        let p = window.point(id);
        let mut dist = 0.0;
        for i in 0..d {
            let diff = p[i] - point[i];
            dist += diff * diff;
        }
        if dist < best.0 {
            best = (dist, id);
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_preset;

    #[test]
    fn window_counts() {
        let (l, r) = build_preset("cubic2").unwrap();
        let w0 = instantiate_window(&l, &r, 0).unwrap();
        assert_eq!((w0.vertex_count(), w0.orbit_count()), (1, 0));
        let w2 = instantiate_window(&l, &r, 2).unwrap();
        assert_eq!((w2.vertex_count(), w2.orbit_count()), (25, 40));
        let (l, r) = build_preset("honeycomb").unwrap();
        assert_eq!(instantiate_window(&l, &r, 1).unwrap().vertex_count(), 18);
    }

    #[test]
    fn orbit_count_is_half_the_inside_half_edges() {
        for name in ["cubic2", "triangular", "honeycomb", "diamond", "cubic3"] {
            let (l, r) = build_preset(name).unwrap();
            let w = instantiate_window(&l, &r, 2).unwrap();
            let directed: usize = (0..w.vertex_count()).map(|x| w.neighbors(x).len()).sum();
            assert_eq!(directed, 2 * w.orbit_count(), "{name}");
            for o in w.orbits() {
                assert!(o.tail < w.vertex_count() && o.head < w.vertex_count());
            }
        }
    }

    #[test]
    fn ids_follow_lexicographic_order() {
        let (l, r) = build_preset("honeycomb").unwrap();
        let w = instantiate_window(&l, &r, 2).unwrap();
        let keys: Vec<(Vec<i64>, usize)> = (0..w.vertex_count()).map(|id| (w.index_of(id).to_vec(), w.base_of(id))).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        for id in 0..w.vertex_count() {
            assert_eq!(w.lookup(w.base_of(id), w.index_of(id)), Some(id));
        }
    }

    #[test]
    fn memory_guard() {
        let (l, r) = build_preset("cubic3").unwrap();
        let err = Window::centered(&l, &r, 10, WindowOptions { max_vertices: 1000 }).unwrap_err();
        assert_eq!(err, Error::WindowTooLarge { requested: 9261, cap: 1000 });
    }

    #[test]
    fn closest_vertex_examples() {
        let (l, r) = build_preset("cubic2").unwrap();
        let w = instantiate_window(&l, &r, 3).unwrap();
        assert_eq!(w.index_of(closest_vertex(&[0.4, 0.4], &w)), &[0, 0]);
        assert_eq!(w.index_of(closest_vertex(&[0.5, 0.0], &w)), &[0, 0]);
        assert_eq!(w.index_of(closest_vertex(&[2.9, -1.2], &w)), &[3, -1]);
    }

    #[test]
    fn graph_view_matches_adjacency() {
        let (l, r) = build_preset("triangular").unwrap();
        let w = instantiate_window(&l, &r, 2).unwrap();
        let g = w.to_graph();
        for x in 0..w.vertex_count() {
            for a in w.neighbors(x) {
                let h = w.graph_half_edge(x, a);
                assert_eq!((g.origin(h), g.terminus(h)), (x, a.to));
            }
        }
    }
}

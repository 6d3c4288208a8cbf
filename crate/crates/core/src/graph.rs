//! Finite graphs in half-edge form, covering-map mechanics and liftings.
//!
//! A graph is a set of vertices and a set of directed half-edges closed
//! under an inversion `e -> ē` with `o(ē) = t(e)`. Loops and parallel edges
//! are allowed. Undirected edges are the inversion orbits `{e, ē}`; the
//! representative of an orbit is its smaller half-edge id.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::lattice::Window;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfEdge {
    pub origin: usize,
    pub terminus: usize,
    pub inverse: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGraph {
    vertex_count: usize,
    half_edges: Vec<HalfEdge>,
    // outgoing half-edges per vertex, ascending id
    outgoing: Vec<Vec<usize>>,
}

impl FiniteGraph {
    /// Builds a graph from undirected edge endpoints. Edge `k` becomes the
    /// half-edges `2k` (`a -> b`) and `2k + 1` (`b -> a`).
    pub fn from_edges(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut half_edges = Vec::with_capacity(2 * edges.len());
        for (k, &(a, b)) in edges.iter().enumerate() {
            half_edges.push(HalfEdge { origin: a, terminus: b, inverse: 2 * k + 1 });
            half_edges.push(HalfEdge { origin: b, terminus: a, inverse: 2 * k });
        }
        Self::from_half_edges(vertex_count, half_edges)
    }

    /// Builds a graph from explicit half-edge records, checking the
    /// inversion involution and incidence coherence.
    pub fn from_half_edges(vertex_count: usize, half_edges: Vec<HalfEdge>) -> Result<Self> {
        let m = half_edges.len();
        for (id, e) in half_edges.iter().enumerate() {
            if e.origin >= vertex_count || e.terminus >= vertex_count {
                return Err(Error::InvalidGraph(format!(
                    "half-edge {id} has an endpoint outside 0..{vertex_count}"
                )));
            }
            if e.inverse >= m {
                return Err(Error::InvalidGraph(format!("half-edge {id} has inverse {} out of range", e.inverse)));
            }
            if e.inverse == id {
                return Err(Error::InvalidGraph(format!("half-edge {id} is its own inverse")));
            }
            let inv = &half_edges[e.inverse];
            if inv.inverse != id {
                return Err(Error::InvalidGraph(format!("inversion is not an involution at half-edge {id}")));
            }
            if inv.origin != e.terminus || inv.terminus != e.origin {
                return Err(Error::InvalidGraph(format!(
                    "half-edge {id} and its inverse {} are not incident-coherent",
                    e.inverse
                )));
            }
        }
        let mut outgoing = vec![Vec::new(); vertex_count];
        for (id, e) in half_edges.iter().enumerate() {
            outgoing[e.origin].push(id);
        }
        Ok(Self { vertex_count, half_edges, outgoing })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn half_edge_count(&self) -> usize {
        self.half_edges.len()
    }

    pub fn half_edges(&self) -> &[HalfEdge] {
        &self.half_edges
    }

    pub fn half_edge(&self, id: usize) -> &HalfEdge {
        &self.half_edges[id]
    }

    pub fn origin(&self, id: usize) -> usize {
        self.half_edges[id].origin
    }

    pub fn terminus(&self, id: usize) -> usize {
        self.half_edges[id].terminus
    }

    pub fn inverse(&self, id: usize) -> usize {
        self.half_edges[id].inverse
    }

    /// Half-edges with origin `v`, ascending by id.
    pub fn outgoing(&self, v: usize) -> &[usize] {
        &self.outgoing[v]
    }

    /// One representative half-edge (the smaller id) per undirected edge.
    pub fn edge_orbits(&self) -> Vec<usize> {
        (0..self.half_edges.len()).filter(|&e| e < self.half_edges[e].inverse).collect()
    }

    pub fn orbit_count(&self) -> usize {
        self.half_edges.len() / 2
    }

    pub fn is_connected(&self) -> bool {
        self.unreached_from(0).is_none()
    }

    fn unreached_from(&self, root: usize) -> Option<usize> {
        if self.vertex_count == 0 {
            return None;
        }
        let mut seen = vec![false; self.vertex_count];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &e in &self.outgoing[v] {
                let w = self.half_edges[e].terminus;
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.iter().position(|s| !s)
    }
}

/// A path as a sequence of half-edges with `o(e_{i+1}) = t(e_i)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PathSeq {
    pub edges: Vec<usize>,
}

impl PathSeq {
    pub fn new(graph: &FiniteGraph, edges: Vec<usize>) -> Result<Self> {
        for &e in &edges {
            if e >= graph.half_edge_count() {
                return Err(Error::InvalidPath(format!("half-edge {e} does not exist")));
            }
        }
        for pair in edges.windows(2) {
            if graph.terminus(pair[0]) != graph.origin(pair[1]) {
                return Err(Error::InvalidPath(format!(
                    "half-edge {} does not start where {} ends",
                    pair[1], pair[0]
                )));
            }
        }
        Ok(Self { edges })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// The reversed path `(ē_r, …, ē_1)`.
    pub fn reversed(&self, graph: &FiniteGraph) -> Self {
        Self { edges: self.edges.iter().rev().map(|&e| graph.inverse(e)).collect() }
    }
}

/// A graph morphism given by vertex and half-edge maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Morphism {
    pub vertex_map: Vec<usize>,
    pub edge_map: Vec<usize>,
}

impl Morphism {
    /// Checks `i(f(e)) = (f(o(e)), f(t(e)))` and `f(ē) = f(e)‾`.
    pub fn is_morphism(&self, src: &FiniteGraph, dst: &FiniteGraph) -> bool {
        if self.vertex_map.len() != src.vertex_count() || self.edge_map.len() != src.half_edge_count() {
            return false;
        }
        if self.vertex_map.iter().any(|&v| v >= dst.vertex_count())
            || self.edge_map.iter().any(|&e| e >= dst.half_edge_count())
        {
            return false;
        }
        src.half_edges().iter().enumerate().all(|(id, e)| {
            let image = dst.half_edge(self.edge_map[id]);
            image.origin == self.vertex_map[e.origin]
                && image.terminus == self.vertex_map[e.terminus]
                && self.edge_map[e.inverse] == image.inverse
        })
    }

    /// Whether the restriction `E_v -> E_{f(v)}` is a bijection.
    pub fn is_local_bijection_at(&self, src: &FiniteGraph, dst: &FiniteGraph, v: usize) -> bool {
        let mut images: Vec<usize> = src.outgoing(v).iter().map(|&e| self.edge_map[e]).collect();
        images.sort_unstable();
        images == dst.outgoing(self.vertex_map[v])
    }

    /// Surjective on vertices and a local bijection everywhere.
    pub fn is_covering(&self, src: &FiniteGraph, dst: &FiniteGraph) -> bool {
        if !self.is_morphism(src, dst) {
            return false;
        }
        let mut hit = vec![false; dst.vertex_count()];
        for &v in &self.vertex_map {
            hit[v] = true;
        }
        hit.into_iter().all(|h| h) && (0..src.vertex_count()).all(|v| self.is_local_bijection_at(src, dst, v))
    }
}

/// A breadth-first spanning tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanningTree {
    pub root: usize,
    /// Tree half-edges oriented parent -> child, in discovery order.
    pub edges: Vec<usize>,
    /// For each vertex, the tree half-edge entering it (`None` at the root).
    pub parent_edge: Vec<Option<usize>>,
}

impl SpanningTree {
    /// The unique tree path from the root to `v`.
    pub fn path_from_root(&self, graph: &FiniteGraph, v: usize) -> PathSeq {
        let mut edges = Vec::new();
        let mut cur = v;
        while let Some(e) = self.parent_edge[cur] {
            edges.push(e);
            cur = graph.origin(e);
        }
        edges.reverse();
        PathSeq { edges }
    }
}

/// Breadth-first spanning tree from vertex 0, scanning half-edges by
/// ascending id. Loops never enter the tree.
pub fn spanning_tree(graph: &FiniteGraph) -> Result<SpanningTree> {
    let n = graph.vertex_count();
    if n == 0 {
        return Err(Error::InvalidGraph("empty graph has no spanning tree".into()));
    }
    if let Some(unreached) = graph.unreached_from(0) {
        return Err(Error::Disconnected { root: 0, unreached });
    }
    let mut parent_edge = vec![None; n];
    let mut seen = vec![false; n];
    let mut edges = Vec::with_capacity(n - 1);
    seen[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for &e in graph.outgoing(v) {
            let w = graph.terminus(e);
            if !seen[w] {
                seen[w] = true;
                parent_edge[w] = Some(e);
                edges.push(e);
                queue.push_back(w);
            }
        }
    }
    Ok(SpanningTree { root: 0, edges, parent_edge })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiftedStep {
    pub base_edge: usize,
    pub to: usize,
}

/// A path in a window, recorded as a start vertex and the steps taken.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedPath {
    pub start: usize,
    pub steps: Vec<LiftedStep>,
}

impl LiftedPath {
    pub fn end(&self) -> usize {
        self.steps.last().map_or(self.start, |s| s.to)
    }

    pub fn vertices(&self) -> Vec<usize> {
        std::iter::once(self.start).chain(self.steps.iter().map(|s| s.to)).collect()
    }

    /// Pushes the path down to the base graph.
    pub fn project(&self) -> PathSeq {
        PathSeq { edges: self.steps.iter().map(|s| s.base_edge).collect() }
    }
}

/// Lifts a base path to the window, starting at `start`.
///
/// Fails with [`Error::OutOfWindow`] as soon as the lift leaves the window.
pub fn lift_path(window: &Window, base_path: &PathSeq, start: usize) -> Result<LiftedPath> {
    let base = window.lattice().base();
    let start_vertex = window.vertex(start);
    if let Some(&first) = base_path.edges.first() {
        if base.origin(first) != start_vertex.base {
            return Err(Error::InvalidPath(format!(
                "start vertex lies over base vertex {}, path starts at {}",
                start_vertex.base,
                base.origin(first)
            )));
        }
    }
    let mut steps = Vec::with_capacity(base_path.len());
    let mut cur = start;
    for &e in &base_path.edges {
        let next = window.step(cur, e)?;
        steps.push(LiftedStep { base_edge: e, to: next });
        cur = next;
    }
    Ok(LiftedPath { start, steps })
}

/// Lifted copies `T_σ` of a base spanning tree, keyed by the translation
/// index `σ` of the lifted root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreePartition {
    pub blocks: BTreeMap<Vec<i64>, Vec<usize>>,
}

impl TreePartition {
    pub fn covered_vertex_count(&self) -> usize {
        self.blocks.values().map(Vec::len).sum()
    }
}

/// Lifts `tree` at every root translate whose whole lift fits in the
/// window. The blocks are pairwise disjoint and cover exactly the window
/// vertices whose tree lift is fully instantiated.
pub fn tree_partition(window: &Window, tree: &SpanningTree) -> Result<TreePartition> {
    let base = window.lattice().base();
    if tree.parent_edge.len() != base.vertex_count() {
        return Err(Error::Mismatch("spanning tree does not belong to the window's base graph".into()));
    }
    let root_paths: Vec<PathSeq> = (0..base.vertex_count()).map(|v| tree.path_from_root(base, v)).collect();
    let mut blocks = BTreeMap::new();
    for id in window.fiber_of_base(tree.root) {
        let mut members = Vec::with_capacity(root_paths.len());
        let mut inside = true;
        for path in &root_paths {
            match lift_path(window, path, id) {
                Ok(lift) => members.push(lift.end()),
                Err(Error::OutOfWindow { .. }) => {
                    inside = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if inside {
            members.sort_unstable();
            blocks.insert(window.vertex(id).index.clone(), members);
        }
    }
    Ok(TreePartition { blocks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bouquet_has_empty_tree() {
        let g = FiniteGraph::from_edges(1, &[(0, 0), (0, 0), (0, 0)]).unwrap();
        let t = spanning_tree(&g).unwrap();
        assert!(t.edges.is_empty());
    }

    #[test]
    fn three_parallel_edges_give_one_tree_edge() {
        let g = FiniteGraph::from_edges(2, &[(0, 1), (0, 1), (0, 1)]).unwrap();
        let t = spanning_tree(&g).unwrap();
        assert_eq!(t.edges, vec![0]);
    }

    #[test]
    fn path_graph_is_its_own_tree() {
        let g = FiniteGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let t = spanning_tree(&g).unwrap();
        assert_eq!(t.edges, vec![0, 2, 4]);
        assert_eq!(t.path_from_root(&g, 3).edges, vec![0, 2, 4]);
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let g = FiniteGraph::from_edges(3, &[(0, 1)]).unwrap();
        assert_eq!(spanning_tree(&g), Err(Error::Disconnected { root: 0, unreached: 2 }));
    }

    #[test]
    fn broken_involution_is_rejected() {
        let bad = vec![
            HalfEdge { origin: 0, terminus: 1, inverse: 1 },
            HalfEdge { origin: 1, terminus: 0, inverse: 1 },
        ];
        assert!(FiniteGraph::from_half_edges(2, bad).is_err());
        let incoherent = vec![
            HalfEdge { origin: 0, terminus: 1, inverse: 1 },
            HalfEdge { origin: 0, terminus: 1, inverse: 0 },
        ];
        assert!(FiniteGraph::from_half_edges(2, incoherent).is_err());
    }

    #[test]
    fn path_validation() {
        let g = FiniteGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(PathSeq::new(&g, vec![0, 2]).is_ok());
        assert!(PathSeq::new(&g, vec![0, 0]).is_err());
        let p = PathSeq::new(&g, vec![0, 2]).unwrap();
        assert_eq!(p.reversed(&g).edges, vec![3, 1]);
    }

    #[test]
    fn double_cover_of_a_loop_is_a_covering() {
        // the 2-cycle with two edges covers the bouquet with one loop
        let cycle = FiniteGraph::from_edges(2, &[(0, 1), (1, 0)]).unwrap();
        let bouquet = FiniteGraph::from_edges(1, &[(0, 0)]).unwrap();
        let f = Morphism { vertex_map: vec![0, 0], edge_map: vec![0, 1, 0, 1] };
        assert!(f.is_morphism(&cycle, &bouquet));
        assert!(f.is_covering(&cycle, &bouquet));
        // both outgoing half-edges at vertex 0 land on the same loop half-edge
        let not_local = Morphism { vertex_map: vec![0, 0], edge_map: vec![0, 1, 1, 0] };
        assert!(not_local.is_morphism(&cycle, &bouquet));
        assert!(!not_local.is_local_bijection_at(&cycle, &bouquet, 0));
        assert!(!not_local.is_covering(&cycle, &bouquet));
    }
}

//! Crystal lattices as `Z^d`-voltage graphs over a finite base graph, and
//! their periodic realizations.
//!
//! A vertex of the infinite lattice is a pair `(u, z)` of a base vertex and
//! a translation index `z ∈ Z^d`. A base half-edge `e` with voltage `v(e)`
//! joins `(o(e), z)` to `(t(e), z + v(e))`. A realization places `(u, z)` at
//! `positions[u] + period · z`.

mod connectivity;
mod io;
mod symmetry;
mod window;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::FiniteGraph;
use crate::quotient::{smith_normal_form, IntMatrix};

pub use connectivity::{edge_connectivity_estimate, max_flow, ConnectivityEstimate, FlowCertificate};
pub use io::{parse_graph, parse_lattice, write_graph, write_lattice};
pub use symmetry::{check_symmetry, rotation_2d};
pub use window::{closest_vertex, instantiate_window, Adjacent, EdgeOrbit, Window, WindowOptions};

/// Relative tolerance for singularity and degeneracy checks.
const GEOMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct LatticeVertex {
    pub base: usize,
    pub index: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrystalLattice {
    base: FiniteGraph,
    dim: usize,
    voltages: Vec<Vec<i64>>,
}

impl CrystalLattice {
    /// Validates antisymmetry of the voltages and connectivity of the
    /// derived graph.
    pub fn new(base: FiniteGraph, dim: usize, voltages: Vec<Vec<i64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidLattice("dimension must be at least 1".into()));
        }
        if voltages.len() != base.half_edge_count() {
            return Err(Error::InvalidLattice(format!(
                "{} voltages for {} half-edges",
                voltages.len(),
                base.half_edge_count()
            )));
        }
        for (e, v) in voltages.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
            let inv = &voltages[base.inverse(e)];
            if v.iter().zip(inv).any(|(a, b)| *a != -*b) {
                return Err(Error::InvalidLattice(format!("voltage of half-edge {e} is not minus that of its inverse")));
            }
            if base.origin(e) == base.terminus(e) && v.iter().all(|&x| x == 0) {
                // a zero-voltage loop lifts to a loop; harmless, but never a crystal edge
                return Err(Error::InvalidLattice(format!("half-edge {e} is a loop with zero voltage")));
            }
        }
        if !base.is_connected() {
            return Err(Error::InvalidLattice("base graph is disconnected".into()));
        }
        let lattice = Self { base, dim, voltages };
        lattice.check_derived_connected()?;
        Ok(lattice)
    }

    pub fn base(&self) -> &FiniteGraph {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn voltage(&self, half_edge: usize) -> &[i64] {
        &self.voltages[half_edge]
    }

    pub fn voltages(&self) -> &[Vec<i64>] {
        &self.voltages
    }

    /// The endpoint of the lift of `half_edge` starting at translation `index`.
    pub fn step(&self, index: &[i64], half_edge: usize) -> (usize, Vec<i64>) {
        let next = index.iter().zip(&self.voltages[half_edge]).map(|(a, b)| a + b).collect();
        (self.base.terminus(half_edge), next)
    }

    /// Tree potentials: voltage sum along the breadth-first tree path from
    /// base vertex 0.
    pub(crate) fn tree_potentials(&self) -> Vec<Vec<i64>> {
        let tree = crate::graph::spanning_tree(&self.base).expect("base graph checked connected");
        let mut pot = vec![vec![0i64; self.dim]; self.base.vertex_count()];
        for &e in &tree.edges {
            let from = pot[self.base.origin(e)].clone();
            pot[self.base.terminus(e)] = from.iter().zip(&self.voltages[e]).map(|(a, b)| a + b).collect();
        }
        pot
    }

    /// The derived graph is connected iff the cycle voltages generate `Z^d`,
    /// i.e. every invariant factor of the cycle-voltage matrix is 1.
    fn check_derived_connected(&self) -> Result<()> {
        let pot = self.tree_potentials();
        let mut columns = Vec::new();
        for e in self.base.edge_orbits() {
            let (o, t) = (self.base.origin(e), self.base.terminus(e));
            let cycle: Vec<i64> =
                (0..self.dim).map(|i| pot[o][i] + self.voltages[e][i] - pot[t][i]).collect();
            if cycle.iter().any(|&x| x != 0) {
                columns.push(cycle);
            }
        }
        if columns.len() < self.dim {
            return Err(Error::InvalidLattice(format!(
                "derived graph is disconnected: cycle voltages span rank < {}",
                self.dim
            )));
        }
        let m = IntMatrix::from_fn(self.dim, columns.len(), |r, c| columns[c][r]);
        let snf = smith_normal_form(&m)?;
        let factors = snf.invariant_factors();
        if factors.len() < self.dim || factors.iter().any(|&f| f != 1) {
            return Err(Error::InvalidLattice(format!(
                "derived graph is disconnected: cycle voltages generate a sublattice with invariant factors {factors:?}"
            )));
        }
        Ok(())
    }
}

/// A periodic realization: base-vertex positions and a period matrix whose
/// columns generate the lattice group.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    positions: Vec<Vec<f64>>,
    period: DMatrix<f64>,
}

impl Realization {
    pub fn new(positions: Vec<Vec<f64>>, period: DMatrix<f64>) -> Result<Self> {
        let d = period.nrows();
        if period.ncols() != d || d == 0 {
            return Err(Error::InvalidRealization("period matrix must be square and nonempty".into()));
        }
        if let Some(p) = positions.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: p.len() });
        }
        let scale = period.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let det = period.determinant();
        if scale == 0.0 || !det.is_finite() || det.abs() <= GEOMETRY_TOL * scale.powi(d as i32) {
            return Err(Error::InvalidRealization(format!("period matrix is singular (det = {det})")));
        }
        Ok(Self { positions, period })
    }

    pub fn dim(&self) -> usize {
        self.period.nrows()
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn period(&self) -> &DMatrix<f64> {
        &self.period
    }

    /// `ρ z`.
    pub fn translation(&self, index: &[i64]) -> Vec<f64> {
        let z = DVector::from_iterator(index.len(), index.iter().map(|&x| x as f64));
        (&self.period * z).iter().copied().collect()
    }

    /// `Φ((u, z)) = positions[u] + ρ z`.
    pub fn point(&self, base: usize, index: &[i64]) -> Vec<f64> {
        let t = self.translation(index);
        self.positions[base].iter().zip(t).map(|(p, s)| p + s).collect()
    }

    /// `A Φ + b`, whose period is `A ρ`.
    pub fn transformed(&self, a: &DMatrix<f64>, b: &[f64]) -> Result<Self> {
        let d = self.dim();
        if a.nrows() != d || a.ncols() != d || b.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: a.nrows() });
        }
        let positions = self
            .positions
            .iter()
            .map(|p| {
                let v = a * DVector::from_column_slice(p);
                v.iter().zip(b).map(|(x, s)| x + s).collect()
            })
            .collect();
        Self::new(positions, a * &self.period)
    }

    pub fn translated(&self, b: &[f64]) -> Result<Self> {
        self.transformed(&DMatrix::identity(self.dim(), self.dim()), b)
    }

    /// Real coordinates of `ρ^{-1}(p - positions[base])`.
    pub(crate) fn lattice_coordinates(&self, base: usize, p: &[f64]) -> Vec<f64> {
        let inv = self.period.clone().try_inverse().expect("period checked nonsingular");
        let diff = DVector::from_iterator(p.len(), p.iter().zip(&self.positions[base]).map(|(a, b)| a - b));
        (inv * diff).iter().copied().collect()
    }

    /// The lattice vertex realized at `p` (within `tol`), if any.
    pub fn locate(&self, p: &[f64], tol: f64) -> Option<LatticeVertex> {
        (0..self.positions.len()).find_map(|u| {
            let c = self.lattice_coordinates(u, p);
            let index: Vec<i64> = c.iter().map(|x| x.round() as i64).collect();
            let q = self.point(u, &index);
            let dist = q.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            (dist <= tol).then_some(LatticeVertex { base: u, index })
        })
    }

    /// Smallest distance between two distinct realized vertices, searched
    /// over translations in `[-2, 2]^d`.
    pub fn min_spacing(&self) -> f64 {
        let d = self.dim();
        let mut best = f64::INFINITY;
        let offsets = box_points(&vec![-2; d], &vec![2; d]);
        for u in 0..self.positions.len() {
            for v in 0..self.positions.len() {
                for z in &offsets {
                    if u == v && z.iter().all(|&x| x == 0) {
                        continue;
                    }
                    let q = self.point(v, z);
                    let dist = q.iter().zip(&self.positions[u]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    best = best.min(dist);
                }
            }
        }
        best
    }

    /// `Φ` is injective iff no difference of base positions is a lattice
    /// translation.
    pub fn check_nondegenerate(&self) -> Result<()> {
        for u in 0..self.positions.len() {
            for v in (u + 1)..self.positions.len() {
                let c = self.lattice_coordinates(v, &self.positions[u]);
                if c.iter().all(|x| (x - x.round()).abs() <= GEOMETRY_TOL) {
                    return Err(Error::InvalidRealization(format!(
                        "degenerate: base vertices {u} and {v} are realized at the same point"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// All integer points of the box `[lo, hi]`, lexicographic order.
pub(crate) fn box_points(lo: &[i64], hi: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::with_capacity(lo.len())];
    for (&a, &b) in lo.iter().zip(hi) {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (a..=b).map(move |x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}

/// Validates a lattice and realization built from explicit data.
pub fn build_custom(
    base: FiniteGraph,
    voltages: Vec<Vec<i64>>,
    positions: Vec<Vec<f64>>,
    period: DMatrix<f64>,
) -> Result<(CrystalLattice, Realization)> {
    let dim = period.nrows();
    if positions.len() != base.vertex_count() {
        return Err(Error::InvalidRealization(format!(
            "{} positions for {} base vertices",
            positions.len(),
            base.vertex_count()
        )));
    }
    let lattice = CrystalLattice::new(base, dim, voltages)?;
    let realization = Realization::new(positions, period)?;
    realization.check_nondegenerate()?;
    Ok((lattice, realization))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Cubic(usize),
    Triangular,
    Honeycomb,
    /// Honeycomb with the same period but the second base vertex moved off
    /// the symmetric position.
    HoneycombShifted,
    Diamond,
}

impl Preset {
    /// Accepts `cubic<d>`, `cubic:<d>`, `triangular`, `honeycomb`,
    /// `honeycomb-shifted` and `diamond`.
    pub fn parse(name: &str) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        if let Some(rest) = lower.strip_prefix("cubic") {
            let d: usize = rest.trim_start_matches([':', '(']).trim_end_matches(')').parse().map_err(|_| Error::UnknownPreset(name.into()))?;
            if d == 0 {
                return Err(Error::InvalidLattice("cubic lattice needs d >= 1".into()));
            }
            return Ok(Preset::Cubic(d));
        }
        match lower.as_str() {
            "triangular" => Ok(Preset::Triangular),
            "honeycomb" => Ok(Preset::Honeycomb),
            "honeycomb-shifted" => Ok(Preset::HoneycombShifted),
            "diamond" => Ok(Preset::Diamond),
            _ => Err(Error::UnknownPreset(name.into())),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Preset::Cubic(d) => format!("cubic{d}"),
            Preset::Triangular => "triangular".into(),
            Preset::Honeycomb => "honeycomb".into(),
            Preset::HoneycombShifted => "honeycomb-shifted".into(),
            Preset::Diamond => "diamond".into(),
        }
    }

    pub fn build(&self) -> Result<(CrystalLattice, Realization)> {
        match *self {
            Preset::Cubic(d) => cubic(d),
            Preset::Triangular => triangular(),
            Preset::Honeycomb => honeycomb(vec![0.0, 1.0]),
            Preset::HoneycombShifted => honeycomb(vec![0.25, 0.75]),
            Preset::Diamond => diamond(),
        }
    }
}

pub fn build_preset(name: &str) -> Result<(CrystalLattice, Realization)> {
    Preset::parse(name)?.build()
}

fn unit(d: usize, i: usize, sign: i64) -> Vec<i64> {
    (0..d).map(|j| if j == i { sign } else { 0 }).collect()
}

/// Loops with the given voltages on a single base vertex.
fn bouquet(dim: usize, loop_voltages: &[Vec<i64>]) -> Result<CrystalLattice> {
    let edges = vec![(0, 0); loop_voltages.len()];
    let base = FiniteGraph::from_edges(1, &edges)?;
    let voltages = loop_voltages
        .iter()
        .flat_map(|v| [v.clone(), v.iter().map(|x| -x).collect()])
        .collect();
    CrystalLattice::new(base, dim, voltages)
}

/// `k` parallel edges from base vertex 0 to base vertex 1.
fn dipole(dim: usize, edge_voltages: &[Vec<i64>]) -> Result<CrystalLattice> {
    let edges = vec![(0, 1); edge_voltages.len()];
    let base = FiniteGraph::from_edges(2, &edges)?;
    let voltages = edge_voltages
        .iter()
        .flat_map(|v| [v.clone(), v.iter().map(|x| -x).collect()])
        .collect();
    CrystalLattice::new(base, dim, voltages)
}

fn cubic(d: usize) -> Result<(CrystalLattice, Realization)> {
    if d == 0 {
        return Err(Error::InvalidLattice("cubic lattice needs d >= 1".into()));
    }
    let loops: Vec<Vec<i64>> = (0..d).map(|i| unit(d, i, 1)).collect();
    let lattice = bouquet(d, &loops)?;
    let realization = Realization::new(vec![vec![0.0; d]], DMatrix::identity(d, d))?;
    Ok((lattice, realization))
}

fn triangular() -> Result<(CrystalLattice, Realization)> {
    let lattice = bouquet(2, &[vec![1, 0], vec![0, 1], vec![-1, 1]])?;
    let h = 3f64.sqrt() / 2.0;
    let period = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, h]);
    let realization = Realization::new(vec![vec![0.0, 0.0]], period)?;
    Ok((lattice, realization))
}

/// Unit bond length; base vertex 0 at the origin.
fn honeycomb(second: Vec<f64>) -> Result<(CrystalLattice, Realization)> {
    let lattice = dipole(2, &[vec![0, 0], vec![1, -1], vec![0, -1]])?;
    let s = 3f64.sqrt();
    let period = DMatrix::from_row_slice(2, 2, &[s, s / 2.0, 0.0, 1.5]);
    let realization = Realization::new(vec![vec![0.0, 0.0], second], period)?;
    realization.check_nondegenerate()?;
    Ok((lattice, realization))
}

/// Face-centred cubic period with the second atom at `(1/4, 1/4, 1/4)`.
fn diamond() -> Result<(CrystalLattice, Realization)> {
    let lattice = dipole(3, &[vec![0, 0, 0], vec![-1, 0, 0], vec![0, -1, 0], vec![0, 0, -1]])?;
    let period = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0]);
    let realization = Realization::new(vec![vec![0.0; 3], vec![0.25; 3]], period)?;
    Ok((lattice, realization))
}

/// The 1-dimensional line whose consecutive vertices are joined by `k`
/// parallel edges.
pub fn parallel_line(k: usize) -> Result<(CrystalLattice, Realization)> {
    let lattice = bouquet(1, &vec![vec![1]; k])?;
    let realization = Realization::new(vec![vec![0.0]], DMatrix::identity(1, 1))?;
    Ok((lattice, realization))
}

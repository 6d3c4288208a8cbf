//! Quotients of crystal lattices by kernel sublattices of `Z^d`.
//!
//! The kernel `K` (integer columns) induces the epimorphism
//! `q: Z^d -> Z^{d1}` with `q K = 0`, the quotient lattice `X1` on the same
//! base graph with voltages `q v(e)`, and the orthogonal projection `P` onto
//! the complement of `ρ K`. The covering map is `ω(u, z) = (u, q z)` and the
//! diagram `P Φ = Φ1 ω` commutes.

mod snf;

use nalgebra::{DMatrix, DVector};

pub use snf::{smith_normal_form, IntMatrix, SmithNormalForm};

use crate::error::{Error, Result};
use crate::graph::Morphism;
use crate::lattice::{CrystalLattice, LatticeVertex, Realization, Window, WindowOptions};

/// Integer basis of a sublattice of `Z^d`, one column per generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelSublattice {
    basis: IntMatrix,
}

impl KernelSublattice {
    /// Checks full column rank and a torsion-free quotient.
    pub fn new(basis: IntMatrix) -> Result<Self> {
        let snf = smith_normal_form(&basis)?;
        let factors = snf.invariant_factors();
        if factors.len() < basis.cols() {
            return Err(Error::RankDeficient { rank: factors.len(), columns: basis.cols() });
        }
        if factors.iter().any(|&f| f != 1) {
            return Err(Error::Torsion { factors });
        }
        Ok(Self { basis })
    }

    pub fn from_columns(dim: usize, columns: &[Vec<i64>]) -> Result<Self> {
        Self::new(IntMatrix::from_columns(dim, columns)?)
    }

    /// The zero sublattice; its quotient is the lattice itself.
    pub fn trivial(dim: usize) -> Self {
        Self { basis: IntMatrix::zeros(dim, 0) }
    }

    pub fn basis(&self) -> &IntMatrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn rank(&self) -> usize {
        self.basis.cols()
    }
}

#[derive(Debug, Clone)]
pub struct QuotientData {
    pub lattice: CrystalLattice,
    pub realization: Realization,
    pub kernel: KernelSublattice,
    /// `d1 × d`, surjective, `q K = 0`.
    pub q: IntMatrix,
    /// `d × d1` with `q s = I`.
    pub section: IntMatrix,
    pub quotient_lattice: CrystalLattice,
    pub quotient_realization: Realization,
    /// `P`, `d1 × d` with orthonormal rows.
    pub projection: DMatrix<f64>,
}

pub fn build_quotient(lattice: &CrystalLattice, realization: &Realization, kernel: &KernelSublattice) -> Result<QuotientData> {
    let d = lattice.dim();
    if kernel.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: kernel.dim() });
    }
    let r = kernel.rank();
    if r >= d {
        return Err(Error::InvalidArgument(format!("kernel of rank {r} leaves no quotient dimensions in Z^{d}")));
    }
    let d1 = d - r;
    let snf = smith_normal_form(kernel.basis())?;
    let q = snf.u.row_block(r, d);
    let section = snf.u_inv.column_block(r, d);

    let voltages = lattice.voltages().iter().map(|v| q.mul_vec(v)).collect::<Result<Vec<_>>>()?;
    let quotient_lattice = CrystalLattice::new(lattice.base().clone(), d1, voltages)?;

    let rho = realization.period();
    let to_real = |m: &IntMatrix| DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j) as f64);
    let kernel_vectors = rho * to_real(kernel.basis());
    let section_vectors = rho * to_real(&section);
    let basis = orthonormal_complement(&kernel_vectors, &section_vectors)?;
    let projection = basis.transpose();

    let positions = realization
        .positions()
        .iter()
        .map(|p| (&projection * DVector::from_column_slice(p)).iter().copied().collect())
        .collect();
    let quotient_realization = Realization::new(positions, &projection * section_vectors)?;

    Ok(QuotientData {
        lattice: lattice.clone(),
        realization: realization.clone(),
        kernel: kernel.clone(),
        q,
        section,
        quotient_lattice,
        quotient_realization,
        projection,
    })
}

/// Orthonormal basis (as columns) of the part of `span(extra)` orthogonal to
/// `span(fixed)`, by modified Gram–Schmidt with one reorthogonalization pass.
fn orthonormal_complement(fixed: &DMatrix<f64>, extra: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut done: Vec<DVector<f64>> = Vec::new();
    let mut out: Vec<DVector<f64>> = Vec::new();
    let push = |v: DVector<f64>, done: &mut Vec<DVector<f64>>| -> Result<DVector<f64>> {
        let scale = v.norm();
        let mut w = v;
        for _ in 0..2 {
            for b in done.iter() {
                let c = b.dot(&w);
                w -= b * c;
            }
        }
        let n = w.norm();
        if n <= 1e-10 * scale.max(1.0) {
            return Err(Error::RankDeficient { rank: done.len(), columns: done.len() + 1 });
        }
        let u = w / n;
        done.push(u.clone());
        Ok(u)
    };
    for c in fixed.column_iter() {
        push(c.into_owned(), &mut done)?;
    }
    for c in extra.column_iter() {
        out.push(push(c.into_owned(), &mut done)?);
    }
    Ok(DMatrix::from_columns(&out))
}

impl QuotientData {
    pub fn dim(&self) -> usize {
        self.q.rows()
    }

    /// `ω(u, z) = (u, q z)`.
    pub fn omega(&self, x: &LatticeVertex) -> LatticeVertex {
        LatticeVertex { base: x.base, index: self.q.mul_vec(&x.index).expect("index fits the quotient map") }
    }

    pub fn project_point(&self, p: &[f64]) -> Vec<f64> {
        (&self.projection * DVector::from_column_slice(p)).iter().copied().collect()
    }

    /// The point of `span(P^T)` that projects to `p1`.
    pub fn embed_point(&self, p1: &[f64]) -> Vec<f64> {
        (self.projection.transpose() * DVector::from_column_slice(p1)).iter().copied().collect()
    }
}

/// All vertices of `window` (a window of the covering lattice) that `ω` maps
/// to vertex `x1` of `window1` (a window of the quotient), ascending.
pub fn covering_fiber(qdata: &QuotientData, window1: &Window, x1: usize, window: &Window) -> Result<Vec<usize>> {
    if x1 >= window1.vertex_count() {
        return Err(Error::InvalidArgument(format!(
            "vertex {x1} is outside the quotient window ({} vertices)",
            window1.vertex_count()
        )));
    }
    let target = window1.vertex(x1);
    let mut out = Vec::new();
    for y in window.fiber_of_base(target.base) {
        if qdata.q.mul_vec(window.index_of(y))? == target.index {
            out.push(y);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagramReport {
    pub radius: i64,
    pub vertices_checked: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Largest `|P Φ(x) - Φ1(ω(x))|` over the window `[-R, R]^d`.
pub fn verify_diagram(qdata: &QuotientData, radius: i64, tol: f64) -> Result<DiagramReport> {
    let window = Window::centered(&qdata.lattice, &qdata.realization, radius, WindowOptions::default())?;
    let mut max_deviation = 0.0f64;
    for x in 0..window.vertex_count() {
        let image = qdata.omega(&window.vertex(x));
        let lhs = qdata.project_point(window.point(x));
        let rhs = qdata.quotient_realization.point(image.base, &image.index);
        let dev = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        max_deviation = max_deviation.max(dev);
    }
    Ok(DiagramReport {
        radius,
        vertices_checked: window.vertex_count(),
        max_deviation,
        tolerance: tol,
        passed: max_deviation <= tol,
    })
}

/// Whether `ω`, restricted to the window `[-R, R]^d`, is a graph morphism
/// into a window of the quotient that is a local bijection at every vertex
/// off the outer layer.
pub fn verify_covering(qdata: &QuotientData, radius: i64) -> Result<bool> {
    let window = Window::centered(&qdata.lattice, &qdata.realization, radius, WindowOptions::default())?;
    let images: Vec<LatticeVertex> = (0..window.vertex_count()).map(|x| qdata.omega(&window.vertex(x))).collect();
    let reach = images.iter().flat_map(|v| v.index.iter().map(|c| c.abs())).max().unwrap_or(0);
    let window1 = Window::centered(&qdata.quotient_lattice, &qdata.quotient_realization, reach, WindowOptions::default())?;
    let vertex_map = images
        .iter()
        .map(|v| window1.lookup(v.base, &v.index).expect("window sized to contain every image"))
        .collect::<Vec<_>>();

    let graph = window.to_graph();
    let graph1 = window1.to_graph();
    let mut edge_map = vec![0usize; graph.half_edge_count()];
    for x in 0..window.vertex_count() {
        for a in window.neighbors(x) {
            let x1 = vertex_map[x];
            let Some(a1) = window1.neighbors(x1).iter().find(|b| b.base_edge == a.base_edge) else {
                return Ok(false);
            };
            edge_map[window.graph_half_edge(x, a)] = window1.graph_half_edge(x1, a1);
        }
    }
    let morphism = Morphism { vertex_map, edge_map };
    if !morphism.is_morphism(&graph, &graph1) {
        return Ok(false);
    }
    Ok((0..window.vertex_count())
        .filter(|&x| !window.in_margin(x, 1))
        .all(|x| morphism.is_local_bijection_at(&graph, &graph1, x)))
}

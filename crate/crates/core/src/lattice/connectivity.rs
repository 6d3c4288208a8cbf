//! Unit-capacity max-flow on windows and the edge-connectivity estimate.

use std::collections::VecDeque;

use crate::error::{Error, Result};

use super::{CrystalLattice, Realization, Window, WindowOptions};

/// Edge-disjoint paths between two window vertices, as vertex sequences and
/// the edge orbits they traverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowCertificate {
    pub source: usize,
    pub target: usize,
    pub vertex_paths: Vec<Vec<usize>>,
    pub orbit_paths: Vec<Vec<usize>>,
}

impl FlowCertificate {
    pub fn value(&self) -> usize {
        self.orbit_paths.len()
    }

    /// Every path is a walk from source to target in the window and no
    /// edge orbit is used twice.
    pub fn verify(&self, window: &Window) -> bool {
        let mut used = vec![false; window.orbit_count()];
        for (vs, os) in self.vertex_paths.iter().zip(&self.orbit_paths) {
            if vs.first() != Some(&self.source) || vs.last() != Some(&self.target) || vs.len() != os.len() + 1 {
                return false;
            }
            for (k, &o) in os.iter().enumerate() {
                if used[o] {
                    return false;
                }
                used[o] = true;
                let orbit = &window.orbits()[o];
                let (a, b) = (vs[k], vs[k + 1]);
                if !((orbit.tail == a && orbit.head == b) || (orbit.tail == b && orbit.head == a)) {
                    return false;
                }
            }
        }
        true
    }
}

/// Maximum number of edge-disjoint paths from `source` to `target`, stopping
/// early once `limit` paths are found.
pub fn max_flow(window: &Window, source: usize, target: usize, limit: Option<usize>) -> FlowCertificate {
    let n = window.vertex_count();
    // flow[o] = +1 when used tail -> head, -1 when used head -> tail
    let mut flow = vec![0i8; window.orbit_count()];
    let mut value = 0usize;
    let limit = limit.unwrap_or(usize::MAX);
    let mut pred: Vec<Option<(usize, usize)>> = vec![None; n];
    while value < limit && source != target {
        pred.iter_mut().for_each(|p| *p = None);
        let mut seen = vec![false; n];
        seen[source] = true;
        let mut queue = VecDeque::from([source]);
        'bfs: while let Some(x) = queue.pop_front() {
            for a in window.neighbors(x) {
                if seen[a.to] || a.to == x {
                    continue;
                }
                let forward = window.orbits()[a.orbit].tail == x;
                let residual = if forward { 1 - flow[a.orbit] } else { 1 + flow[a.orbit] };
                if residual > 0 {
                    seen[a.to] = true;
                    pred[a.to] = Some((x, a.orbit));
                    if a.to == target {
                        break 'bfs;
                    }
                    queue.push_back(a.to);
                }
            }
        }
        if !seen[target] {
            break;
        }
        let mut cur = target;
        while let Some((prev, o)) = pred[cur] {
            flow[o] += if window.orbits()[o].tail == prev { 1 } else { -1 };
            cur = prev;
        }
        value += 1;
    }
    decompose(window, source, target, value, flow)
}

fn decompose(window: &Window, source: usize, target: usize, value: usize, mut flow: Vec<i8>) -> FlowCertificate {
    let mut vertex_paths = Vec::with_capacity(value);
    let mut orbit_paths = Vec::with_capacity(value);
    for _ in 0..value {
        let mut vs = vec![source];
        let mut os: Vec<usize> = Vec::new();
        let mut cur = source;
        while cur != target {
            let (next, o) = window
                .neighbors(cur)
                .iter()
                .find_map(|a| {
                    let forward = window.orbits()[a.orbit].tail == cur;
                    let out = if forward { flow[a.orbit] == 1 } else { flow[a.orbit] == -1 };
                    (out && a.to != cur).then_some((a.to, a.orbit))
                })
                .expect("flow conservation");
            flow[o] = 0;
            if let Some(pos) = vs.iter().position(|&v| v == next) {
                // drop the circulation just closed
                vs.truncate(pos + 1);
                os.truncate(pos);
            } else {
                vs.push(next);
                os.push(o);
            }
            cur = next;
        }
        vertex_paths.push(vs);
        orbit_paths.push(os);
    }
    FlowCertificate { source, target, vertex_paths, orbit_paths }
}

#[derive(Debug, Clone)]
pub struct ConnectivityEstimate {
    pub value: usize,
    pub radius: i64,
    pub pairs_checked: usize,
    /// Edge-disjoint paths for the minimizing pair.
    pub certificate: FlowCertificate,
}

/// Minimum window max-flow from the origin cell to every interior vertex,
/// on the window `[-R, R]^d` with a boundary margin of one layer.
///
/// Sources are the vertices over each base vertex at translation 0; by
/// periodicity every pair is a translate of one of these.
pub fn edge_connectivity_estimate(lattice: &CrystalLattice, realization: &Realization, radius: i64) -> Result<ConnectivityEstimate> {
    if radius < 2 {
        return Err(Error::WindowTooSmall(format!("edge connectivity needs R >= 2, got {radius}")));
    }
    let window = Window::centered(lattice, realization, radius, WindowOptions::default())?;
    let d = lattice.dim();
    let origin = vec![0i64; d];
    let mut best: Option<FlowCertificate> = None;
    let mut pairs = 0usize;
    for u in 0..lattice.base().vertex_count() {
        let s = window.lookup(u, &origin).expect("origin cell is inside");
        for t in 0..window.vertex_count() {
            if t == s || window.in_margin(t, 1) {
                continue;
            }
            pairs += 1;
            let limit = best.as_ref().map(|b| b.value());
            let cert = max_flow(&window, s, t, limit);
            if best.as_ref().is_none_or(|b| cert.value() < b.value()) {
                best = Some(cert);
            }
        }
    }
    let certificate = best.ok_or_else(|| Error::WindowTooSmall("no interior vertex pairs".into()))?;
    Ok(ConnectivityEstimate { value: certificate.value(), radius, pairs_checked: pairs, certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_preset, instantiate_window, parallel_line};

    #[test]
    fn adjacent_cubic_vertices_have_four_disjoint_paths() {
        let (l, r) = build_preset("cubic2").unwrap();
        let w = instantiate_window(&l, &r, 3).unwrap();
        let s = w.lookup(0, &[0, 0]).unwrap();
        let t = w.lookup(0, &[1, 0]).unwrap();
        let cert = max_flow(&w, s, t, None);
        assert_eq!(cert.value(), 4);
        assert!(cert.verify(&w));
    }

    #[test]
    fn limit_stops_early() {
        let (l, r) = build_preset("cubic2").unwrap();
        let w = instantiate_window(&l, &r, 3).unwrap();
        let cert = max_flow(&w, 0, 24, Some(2));
        assert_eq!(cert.value(), 2);
        assert!(cert.verify(&w));
    }

    #[test]
    fn presets() {
        let cases = [("cubic2", 4), ("honeycomb", 3), ("triangular", 6)];
        for (name, expected) in cases {
            let (l, r) = build_preset(name).unwrap();
            let est = edge_connectivity_estimate(&l, &r, 3).unwrap();
            assert_eq!(est.value, expected, "{name}");
        }
        let (l, r) = parallel_line(2).unwrap();
        assert_eq!(edge_connectivity_estimate(&l, &r, 3).unwrap().value, 2);
    }

    #[test]
    fn radius_one_is_too_small() {
        let (l, r) = build_preset("cubic2").unwrap();
        assert!(matches!(edge_connectivity_estimate(&l, &r, 1), Err(Error::WindowTooSmall(_))));
    }
}

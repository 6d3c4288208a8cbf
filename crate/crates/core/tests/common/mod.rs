//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use crystal_fpp::fpp::Configuration;
use crystal_fpp::lattice::Window;
use crystal_fpp::quotient::IntMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

/// Determinant by cofactor expansion in arbitrary precision.
pub fn big_det(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::from(1);
    }
    let mut total = BigInt::zero();
    for j in 0..n {
        let minor: Vec<Vec<BigInt>> = m[1..].iter().map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, x)| x.clone()).collect()).collect();
        let term = &m[0][j] * big_det(&minor);
        if j % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Invariant factors `d_k / d_{k-1}`, where `d_k` is the gcd of all `k x k`
/// minors.
pub fn invariant_factors_oracle(m: &IntMatrix) -> Vec<i64> {
    let mut divisors = vec![BigInt::from(1)];
    for k in 1..=m.rows().min(m.cols()) {
        let mut g = BigInt::zero();
        for rows in subsets(m.rows(), k) {
            for cols in subsets(m.cols(), k) {
                let sub: Vec<Vec<BigInt>> = rows.iter().map(|&r| cols.iter().map(|&c| BigInt::from(m.get(r, c))).collect()).collect();
                g = g.gcd(&big_det(&sub));
            }
        }
        if g.is_zero() {
            break;
        }
        divisors.push(g);
    }
    divisors.windows(2).map(|w| i64::try_from(&w[1] / &w[0]).unwrap()).collect()
}

pub fn is_unimodular(m: &IntMatrix) -> bool {
    let rows: Vec<Vec<BigInt>> = (0..m.rows()).map(|r| m.row(r).iter().map(|&x| BigInt::from(x)).collect()).collect();
    big_det(&rows).abs() == BigInt::from(1)
}

/// Passage times by repeated relaxation of every window edge until nothing
/// changes.
pub fn bellman_ford(window: &Window, config: &Configuration, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; window.vertex_count()];
    dist[source] = 0.0;
    loop {
        let mut changed = false;
        for (o, e) in window.orbits().iter().enumerate() {
            let t = config.time(o);
            for (a, b) in [(e.tail, e.head), (e.head, e.tail)] {
                if dist[a] + t < dist[b] {
                    dist[b] = dist[a] + t;
                    changed = true;
                }
            }
        }
        if !changed {
            return dist;
        }
    }
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Critical value of the two-sample statistic at level 0.01.
pub fn ks_critical_001(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

//! Exact integer matrices and the Smith normal form.
//!
//! All arithmetic is overflow-checked `i64`; an overflow surfaces as
//! [`Error::Overflow`] rather than wrapping.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| i64::from(r == c))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> i64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged integer matrix".into()));
        }
        Ok(Self::from_fn(rows.len(), cols, |r, c| rows[r][c]))
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<i64>]) -> Result<Self> {
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch { expected: rows, got: columns.iter().map(Vec::len).find(|&l| l != rows).unwrap_or(0) });
        }
        Ok(Self::from_fn(rows, columns.len(), |r, c| columns[c][r]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[i64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<i64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_block(&self, start: usize, end: usize) -> Self {
        Self::from_fn(end - start, self.cols, |r, c| self.get(start + r, c))
    }

    /// Columns `start..end` as a new matrix.
    pub fn column_block(&self, start: usize, end: usize) -> Self {
        Self::from_fn(self.rows, end - start, |r, c| self.get(r, start + c))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc: i64 = 0;
                for k in 0..self.cols {
                    let term = self.get(r, k).checked_mul(other.get(k, c)).ok_or(Error::Overflow("matrix product"))?;
                    acc = acc.checked_add(term).ok_or(Error::Overflow("matrix product"))?;
                }
                out.set(r, c, acc);
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[i64]) -> Result<Vec<i64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: v.len() });
        }
        (0..self.rows)
            .map(|r| {
                self.row(r).iter().zip(v).try_fold(0i64, |acc, (a, b)| {
                    a.checked_mul(*b).and_then(|t| acc.checked_add(t)).ok_or(Error::Overflow("matrix-vector product"))
                })
            })
            .collect()
    }

    /// Fraction-free (Bareiss) determinant in `i128`.
    pub fn determinant(&self) -> Result<i64> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, got: self.cols });
        }
        let n = self.rows;
        if n == 0 {
            return Ok(1);
        }
        let mut a: Vec<Vec<i128>> = (0..n).map(|r| self.row(r).iter().map(|&x| i128::from(x)).collect()).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n - 1 {
            if a[k][k] == 0 {
                let Some(swap) = (k + 1..n).find(|&i| a[i][k] != 0) else { return Ok(0) };
                a.swap(k, swap);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = a[i][j]
                        .checked_mul(a[k][k])
                        .and_then(|x| a[i][k].checked_mul(a[k][j]).and_then(|y| x.checked_sub(y)))
                        .ok_or(Error::Overflow("determinant"))?;
                    a[i][j] = num / prev;
                }
            }
            prev = a[k][k];
        }
        i64::try_from(sign * a[n - 1][n - 1]).map_err(|_| Error::Overflow("determinant"))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    /// `row[target] += factor * row[source]`
    fn add_row(&mut self, target: usize, source: usize, factor: i64) -> Result<()> {
        for c in 0..self.cols {
            let v = self
                .get(source, c)
                .checked_mul(factor)
                .and_then(|t| self.get(target, c).checked_add(t))
                .ok_or(Error::Overflow("row operation"))?;
            self.set(target, c, v);
        }
        Ok(())
    }

    /// `col[target] += factor * col[source]`
    fn add_col(&mut self, target: usize, source: usize, factor: i64) -> Result<()> {
        for r in 0..self.rows {
            let v = self
                .get(r, source)
                .checked_mul(factor)
                .and_then(|t| self.get(r, target).checked_add(t))
                .ok_or(Error::Overflow("column operation"))?;
            self.set(r, target, v);
        }
        Ok(())
    }

    fn negate_row(&mut self, r: usize) -> Result<()> {
        for c in 0..self.cols {
            let v = self.get(r, c).checked_neg().ok_or(Error::Overflow("row negation"))?;
            self.set(r, c, v);
        }
        Ok(())
    }

    fn negate_col(&mut self, c: usize) -> Result<()> {
        for r in 0..self.rows {
            let v = self.get(r, c).checked_neg().ok_or(Error::Overflow("column negation"))?;
            self.set(r, c, v);
        }
        Ok(())
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(i64::to_string).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// `u · m · v = d` with `u`, `v` unimodular and `d` diagonal with
/// nonnegative entries `d_1 | d_2 | …`. `u_inv` is the exact inverse of `u`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithNormalForm {
    pub u: IntMatrix,
    pub u_inv: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
}

impl SmithNormalForm {
    pub fn diagonal(&self) -> Vec<i64> {
        (0..self.d.rows().min(self.d.cols())).map(|i| self.d.get(i, i)).collect()
    }

    /// The nonzero diagonal entries.
    pub fn invariant_factors(&self) -> Vec<i64> {
        self.diagonal().into_iter().take_while(|&x| x != 0).collect()
    }

    pub fn rank(&self) -> usize {
        self.invariant_factors().len()
    }
}

/// Row and column operations recorded on `u`, `u_inv` and `v`.
struct Reducer {
    a: IntMatrix,
    u: IntMatrix,
    u_inv: IntMatrix,
    v: IntMatrix,
}

impl Reducer {
    fn swap_rows(&mut self, i: usize, j: usize) {
        self.a.swap_rows(i, j);
        self.u.swap_rows(i, j);
        self.u_inv.swap_cols(i, j);
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        self.a.swap_cols(i, j);
        self.v.swap_cols(i, j);
    }

    /// `row[target] += k * row[source]`; the inverse gets `col[source] -= k * col[target]`.
    fn add_row(&mut self, target: usize, source: usize, k: i64) -> Result<()> {
        self.a.add_row(target, source, k)?;
        self.u.add_row(target, source, k)?;
        self.u_inv.add_col(source, target, k.checked_neg().ok_or(Error::Overflow("row operation"))?)
    }

    fn add_col(&mut self, target: usize, source: usize, k: i64) -> Result<()> {
        self.a.add_col(target, source, k)?;
        self.v.add_col(target, source, k)
    }

    fn negate_row(&mut self, r: usize) -> Result<()> {
        self.a.negate_row(r)?;
        self.u.negate_row(r)?;
        self.u_inv.negate_col(r)
    }
}

pub fn smith_normal_form(m: &IntMatrix) -> Result<SmithNormalForm> {
    let (rows, cols) = (m.rows(), m.cols());
    let mut red = Reducer { a: m.clone(), u: IntMatrix::identity(rows), u_inv: IntMatrix::identity(rows), v: IntMatrix::identity(cols) };
    for t in 0..rows.min(cols) {
        // smallest nonzero entry of the trailing block becomes the pivot
        let mut pivot: Option<(usize, usize)> = None;
        for r in t..rows {
            for c in t..cols {
                let x = red.a.get(r, c);
                if x != 0 && pivot.is_none_or(|(pr, pc)| x.unsigned_abs() < red.a.get(pr, pc).unsigned_abs()) {
                    pivot = Some((r, c));
                }
            }
        }
        let Some((pr, pc)) = pivot else { break };
        red.swap_rows(t, pr);
        red.swap_cols(t, pc);
        loop {
            let p = red.a.get(t, t);
            let mut changed = false;
            for r in t + 1..rows {
                let x = red.a.get(r, t);
                if x != 0 {
                    red.add_row(r, t, -(x / p))?;
                    if red.a.get(r, t) != 0 {
                        red.swap_rows(t, r);
                        changed = true;
                        break;
                    }
                }
            }
            if changed {
                continue;
            }
            let p = red.a.get(t, t);
            for c in t + 1..cols {
                let x = red.a.get(t, c);
                if x != 0 {
                    red.add_col(c, t, -(x / p))?;
                    if red.a.get(t, c) != 0 {
                        red.swap_cols(t, c);
                        changed = true;
                        break;
                    }
                }
            }
            if changed {
                continue;
            }
            // the pivot must divide the whole trailing block
            let p = red.a.get(t, t);
            let offender = (t + 1..rows).find(|&r| (t + 1..cols).any(|c| red.a.get(r, c) % p != 0));
            match offender {
                Some(r) => red.add_row(t, r, 1)?,
                None => break,
            }
        }
        if red.a.get(t, t) < 0 {
            red.negate_row(t)?;
        }
    }
    Ok(SmithNormalForm { u: red.u, u_inv: red.u_inv, d: red.a, v: red.v })
}

//! Sparse storage, banded factorizations and symmetric eigensolvers used by
//! the discrete operators.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Builds from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        trip.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(trip.len());
        let mut vals: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trip {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { nrows, ncols, row_ptr, col_idx, vals }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `max |A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Largest `|i − j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for i in 0..self.nrows {
            for (j, _) in self.row(i) {
                bw = bw.max(i.abs_diff(j));
            }
        }
        bw
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// `D_l · A · D_r` for diagonal scalings given as vectors.
    pub fn scaled(&self, left: &[f64], right: &[f64]) -> Self {
        let mut out = self.clone();
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.vals[k] *= left[i] * right[self.col_idx[k]];
            }
        }
        out
    }

    /// Diagonal and first off-diagonal when the matrix is symmetric tridiagonal.
    pub fn tridiagonal_parts(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.bandwidth() > 1 {
            return None;
        }
        let n = self.nrows;
        let d = (0..n).map(|i| self.get(i, i)).collect();
        let e = (0..n.saturating_sub(1)).map(|i| self.get(i + 1, i)).collect();
        Some((d, e))
    }
}

/// LU factorization of a banded matrix without pivoting. Used for the
/// symmetric positive definite systems of Crank–Nicolson stepping and inverse
/// iteration, where pivoting is unnecessary.
#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    bw: usize,
    // row i stores columns i−bw ..= i+bw at offsets 0 ..= 2bw
    data: Vec<f64>,
}

impl BandLu {
    /// Factors `alpha·A + beta·diag(dvec)`.
    pub fn factor(a: &Csr, alpha: f64, beta: f64, dvec: &[f64]) -> Result<Self> {
        let n = a.nrows;
        let bw = a.bandwidth();
        let w = 2 * bw + 1;
        let mut data = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in a.row(i) {
                data[i * w + (j + bw - i)] += alpha * v;
            }
            data[i * w + bw] += beta * dvec[i];
        }
        for k in 0..n {
            let pivot = data[k * w + bw];
            if !(pivot.abs() > 0.0) || !pivot.is_finite() {
                return Err(Error::Eigen(format!("zero pivot at row {k} in banded factorization")));
            }
            let iend = (k + bw).min(n - 1);
            for i in k + 1..=iend {
                let lik = data[i * w + (k + bw - i)] / pivot;
                data[i * w + (k + bw - i)] = lik;
                if lik == 0.0 {
                    continue;
                }
                for j in k + 1..=(k + bw).min(n - 1) {
                    let ukj = data[k * w + (j + bw - k)];
                    data[i * w + (j + bw - i)] -= lik * ukj;
                }
            }
        }
        Ok(Self { n, bw, data })
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        let w = 2 * bw + 1;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = x[i];
            for j in lo..i {
                s -= self.data[i * w + (j + bw - i)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = x[i];
            for j in i + 1..=hi {
                s -= self.data[i * w + (j + bw - i)] * x[j];
            }
            x[i] = s / self.data[i * w + bw];
        }
    }
}

/// Eigenpairs of a symmetric matrix, ascending; `vectors[k]` is the k-th
/// unit eigenvector.
#[derive(Clone, Debug)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Number of eigenvalues of the symmetric tridiagonal `(d, e)` below `x`.
fn sturm_count(d: &[f64], e2: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        q = d[i] - x - e2[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Solves `(T − λI)x = b` for tridiagonal `T` by LU with partial pivoting;
/// tiny pivots are perturbed so nearly singular shifts stay usable.
fn shifted_tridiagonal_solve(d: &[f64], e: &[f64], lambda: f64, b: &mut [f64], tiny: f64) {
    let n = d.len();
    if n == 1 {
        let p = d[0] - lambda;
        b[0] /= if p.abs() < tiny { tiny } else { p };
        return;
    }
    // U has three diagonals after pivoting
    let mut u0 = vec![0.0; n];
    let mut u1 = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    let mut mult = vec![0.0; n];
    let mut swapped = vec![false; n];
    let mut diag = d[0] - lambda;
    let mut up = e[0];
    for i in 0..n - 1 {
        let sub = e[i];
        let next_diag = d[i + 1] - lambda;
        let next_up = if i + 1 < n - 1 { e[i + 1] } else { 0.0 };
        if diag.abs() >= sub.abs() {
            let piv = if diag.abs() < tiny { tiny.copysign(diag) } else { diag };
            let m = sub / piv;
            mult[i] = m;
            u0[i] = piv;
            u1[i] = up;
            u2[i] = 0.0;
            diag = next_diag - m * up;
            up = next_up;
        } else {
            let m = diag / sub;
            mult[i] = m;
            swapped[i] = true;
            u0[i] = sub;
            u1[i] = next_diag;
            u2[i] = next_up;
            diag = up - m * next_diag;
            up = -m * next_up;
        }
    }
    u0[n - 1] = if diag.abs() < tiny { tiny.copysign(diag) } else { diag };
    for i in 0..n - 1 {
        if swapped[i] {
            b.swap(i, i + 1);
        }
        b[i + 1] -= mult[i] * b[i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        if i + 1 < n {
            s -= u1[i] * b[i + 1];
        }
        if i + 2 < n {
            s -= u2[i] * b[i + 2];
        }
        b[i] = s / u0[i];
    }
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL with
/// Wilkinson shifts, ascending; `None` if an eigenvalue fails to converge.
fn ql_eigenvalues(d: &[f64], e: &[f64]) -> Option<Vec<f64>> {
    let n = d.len();
    let mut d = d.to_vec();
    let mut e: Vec<f64> = e.to_vec();
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return None;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Some(d)
}

/// All eigenpairs of the symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e`.
///
/// Eigenvalues by implicit QL (Sturm bisection as a fallback), vectors by inverse iteration with
/// reorthogonalization inside clusters of close eigenvalues, then a
/// Rayleigh-quotient refinement of each value.
pub fn tridiagonal_eig(d: &[f64], e: &[f64]) -> Result<SymEig> {
    let n = d.len();
    if n == 0 {
        return Ok(SymEig { values: vec![], vectors: vec![] });
    }
    if e.len() + 1 != n {
        return Err(Error::Dimension { expected: n - 1, got: e.len() });
    }
    let e2: Vec<f64> = e.iter().map(|v| v * v).collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let tnorm = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let pivmin = f64::MIN_POSITIVE * 1e10 * tnorm.max(1.0);
    let pad = 2.0 * f64::EPSILON * tnorm * n as f64;
    lo -= pad;
    hi += pad;

    let values = match ql_eigenvalues(d, e) {
        Some(v) => v,
        None => (0..n)
            .into_par_iter()
            .map(|k| {
                let (mut a, mut b) = (lo, hi);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b || (b - a) <= 2.0 * f64::EPSILON * m.abs().max(pivmin) {
                        break;
                    }
                    if sturm_count(d, &e2, m, pivmin) > k {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                0.5 * (a + b)
            })
            .collect(),
    };

    // consecutive eigenvalues closer than this share a cluster
    let cluster_gap = 1e-5 * tnorm;
    let tiny = f64::EPSILON * tnorm;
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut cluster_start = 0;
    for k in 0..n {
        if k > 0 && values[k] - values[k - 1] > cluster_gap {
            cluster_start = k;
        }
        // deterministic, non-degenerate start vector
        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * (((i * 7919 + k * 104_729) % 1000) as f64 / 1000.0 - 0.5))
            .collect();
        for _ in 0..3 {
            shifted_tridiagonal_solve(d, e, values[k], &mut x, tiny);
            for v in &vectors[cluster_start..k] {
                let p: f64 = v.iter().zip(&x).map(|(a, b)| a * b).sum();
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi -= p * vi;
                }
            }
            let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(nrm > 0.0) || !nrm.is_finite() {
                return Err(Error::Eigen(format!("inverse iteration broke down for eigenvalue {k}")));
            }
            x.iter_mut().for_each(|v| *v /= nrm);
        }
        vectors.push(x);
    }

    // Rayleigh quotients; the vectors are unit so no division is needed
    let mut values = values;
    for (k, v) in vectors.iter().enumerate() {
        let mut r = 0.0;
        for i in 0..n {
            let mut tv = d[i] * v[i];
            if i > 0 {
                tv += e[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                tv += e[i] * v[i + 1];
            }
            r += v[i] * tv;
        }
        values[k] = r;
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = values.into_iter().zip(vectors).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (values, vectors) = pairs.into_iter().unzip();
    Ok(SymEig { values, vectors })
}

/// All eigenpairs of a dense symmetric matrix.
pub fn dense_sym_eig(a: DMatrix<f64>) -> Result<SymEig> {
    let n = a.nrows();
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("dense symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    Ok(SymEig { values, vectors })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ w_i a_i b_i`, the inner product induced by a diagonal mass matrix.
pub fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
}

pub fn weighted_norm(w: &[f64], a: &[f64]) -> f64 {
    weighted_dot(w, a, a).sqrt()
}

pub fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

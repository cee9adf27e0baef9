//! Biorthogonal eigendecomposition and the overlap matrix
//! O_kl = <L_k|L_l><R_l|R_k>.

use crate::numcore::C64;
use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, MatRef};
use thiserror::Error;

pub const DEFECTIVE_COND_LIMIT: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OverlapError {
    #[error("eigendecomposition failed to converge")]
    NoConvergence,
    #[error("near-defective matrix: eigenvector condition estimate {0:e}")]
    NearDefective(f64),
    #[error("matrix must be square and non-empty")]
    Shape,
}

/// Eigenvalues sorted lexicographically by (Re, Im); right eigenvectors are
/// the columns of `right`, left eigenvectors the rows of `left = right^-1`.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<C64>,
    pub right: Mat<C64>,
    pub left: Mat<C64>,
    /// max |(L R - 1)_ij|
    pub biorth_residual: f64,
    /// ||R||_F ||L||_F / N, a cheap upper estimate of the eigenvector
    /// condition number.
    pub condition: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapRecord {
    pub k: usize,
    pub l: usize,
    pub lambda_k: C64,
    pub lambda_l: C64,
    pub o: C64,
}

/// Dense N x N overlap matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    pub n: usize,
    pub data: Vec<C64>,
}

impl OverlapMatrix {
    #[inline]
    pub fn get(&self, k: usize, l: usize) -> C64 {
        self.data[k * self.n + l]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.get(k, k).re).collect()
    }

    /// max_k |sum_l O_kl - 1|
    pub fn row_sum_residual(&self) -> f64 {
        (0..self.n)
            .map(|k| {
                let s: C64 = self.data[k * self.n..(k + 1) * self.n].iter().sum();
                (s - 1.0).norm()
            })
            .fold(0.0, f64::max)
    }
}

fn frobenius(a: MatRef<'_, C64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

/// Eigendecomposition with left vectors from the inverse of the right
/// eigenvector matrix. Near-defective input is reported as an error.
pub fn eig_biorthogonal(x: MatRef<'_, C64>) -> Result<EigenSystem, OverlapError> {
    let n = x.nrows();
    if n == 0 || x.ncols() != n {
        return Err(OverlapError::Shape);
    }
    let evd = x.eigen().map_err(|_| OverlapError::NoConvergence)?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].re.total_cmp(&s[b].re).then(s[a].im.total_cmp(&s[b].im)));
    let eigenvalues: Vec<C64> = order.iter().map(|&k| s[k]).collect();
    let right = Mat::from_fn(n, n, |i, j| u[(i, order[j])]);
    let left = right.partial_piv_lu().inverse();
    let condition = frobenius(right.as_ref()) * frobenius(left.as_ref()) / n as f64;
    if !condition.is_finite() || condition > DEFECTIVE_COND_LIMIT {
        return Err(OverlapError::NearDefective(condition));
    }
    let p = &left * &right;
    let mut res: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let e = if i == j { 1.0 } else { 0.0 };
            res = res.max((p[(i, j)] - e).norm());
        }
    }
    Ok(EigenSystem { eigenvalues, right, left, biorth_residual: res, condition })
}

/// O_kl = G_kl H_lk with G = L L^dagger and H = R^dagger R.
pub fn overlap_matrix(es: &EigenSystem) -> OverlapMatrix {
    let n = es.eigenvalues.len();
    let l = &es.left;
    let r = &es.right;
    let g = l * l.adjoint();
    let h = r.adjoint() * r;
    let mut data = Vec::with_capacity(n * n);
    for k in 0..n {
        for j in 0..n {
            data.push(g[(k, j)] * h[(j, k)]);
        }
    }
    OverlapMatrix { n, data }
}

pub fn overlap_records(es: &EigenSystem, o: &OverlapMatrix) -> Vec<OverlapRecord> {
    let ev = &es.eigenvalues;
    let mut out = Vec::with_capacity(o.n * o.n);
    for k in 0..o.n {
        for l in 0..o.n {
            out.push(OverlapRecord { k, l, lambda_k: ev[k], lambda_l: ev[l], o: o.get(k, l) });
        }
    }
    out
}

/// Eigenvalues and overlaps of one matrix, the unit consumed by estimators.
#[derive(Debug, Clone)]
pub struct SampleOverlaps {
    pub sample_id: u64,
    pub eigenvalues: Vec<C64>,
    pub overlaps: OverlapMatrix,
}

pub fn analyze(sample_id: u64, x: MatRef<'_, C64>) -> Result<SampleOverlaps, OverlapError> {
    let es = eig_biorthogonal(x)?;
    let overlaps = overlap_matrix(&es);
    Ok(SampleOverlaps { sample_id, eigenvalues: es.eigenvalues, overlaps })
}

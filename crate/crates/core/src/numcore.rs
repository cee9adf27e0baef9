//! Shared numerics: quaternion 2x2 algebra, 4x4 tensor helpers, Wirtinger
//! finite differences, batch accumulators and seeded random streams.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("singular quaternion: |det| = {det:e} below {eps:e}")]
    SingularQuaternion { det: f64, eps: f64 },
    #[error("singular 4x4 system")]
    Singular4,
    #[error("non-finite value encountered")]
    NonFinite,
}

/// A point z = x + iy of the spectral plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoint {
    pub re: f64,
    pub im: f64,
}

impl ComplexPoint {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }
    pub fn z(self) -> C64 {
        C64::new(self.re, self.im)
    }
}

impl From<C64> for ComplexPoint {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// 2x2 complex matrix laid out as [[q11, q1b], [qb1, qbb]], the index 1
/// standing for X and b (1-bar) for X^dagger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion22 {
    pub q11: C64,
    pub q1b: C64,
    pub qb1: C64,
    pub qbb: C64,
}

impl Quaternion22 {
    pub fn new(q11: C64, q1b: C64, qb1: C64, qbb: C64) -> Self {
        Self { q11, q1b, qb1, qbb }
    }

    /// The physical argument Q = [[z, i conj(w)], [i w, conj(z)]].
    pub fn from_point(z: C64, w: C64) -> Self {
        Self::new(z, I * w.conj(), I * w, z.conj())
    }

    pub fn identity() -> Self {
        Self::diag(C64::new(1.0, 0.0), C64::new(1.0, 0.0))
    }

    pub fn zero() -> Self {
        Self::diag(C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    }

    pub fn diag(a: C64, d: C64) -> Self {
        let z = C64::new(0.0, 0.0);
        Self::new(a, z, z, d)
    }

    pub fn to_array(self) -> [[C64; 2]; 2] {
        [[self.q11, self.q1b], [self.qb1, self.qbb]]
    }

    pub fn from_array(m: [[C64; 2]; 2]) -> Self {
        Self::new(m[0][0], m[0][1], m[1][0], m[1][1])
    }

    pub fn det(self) -> C64 {
        self.q11 * self.qbb - self.q1b * self.qb1
    }

    pub fn norm_sqr(self) -> f64 {
        self.q11.norm_sqr() + self.q1b.norm_sqr() + self.qb1.norm_sqr() + self.qbb.norm_sqr()
    }

    pub fn is_on_shell(self, tol: f64) -> bool {
        (self.qbb - self.q11.conj()).norm() <= tol && (self.qb1 + self.q1b.conj()).norm() <= tol
    }

    pub fn transpose(self) -> Self {
        Self::new(self.q11, self.qb1, self.q1b, self.qbb)
    }

    pub fn scale(self, s: C64) -> Self {
        Self::new(self.q11 * s, self.q1b * s, self.qb1 * s, self.qbb * s)
    }

    pub fn mul(self, o: Self) -> Self {
        Self::new(
            self.q11 * o.q11 + self.q1b * o.qb1,
            self.q11 * o.q1b + self.q1b * o.qbb,
            self.qb1 * o.q11 + self.qbb * o.qb1,
            self.qb1 * o.q1b + self.qbb * o.qbb,
        )
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.q11 + o.q11, self.q1b + o.q1b, self.qb1 + o.qb1, self.qbb + o.qbb)
    }

    pub fn sub(self, o: Self) -> Self {
        Self::new(self.q11 - o.q11, self.q1b - o.q1b, self.qb1 - o.qb1, self.qbb - o.qbb)
    }

    /// Inverse with the default singularity threshold 1e-12 * |q|^2.
    pub fn inverse(self) -> Result<Self, NumError> {
        self.inverse_eps(1e-12)
    }

    pub fn inverse_eps(self, rel_eps: f64) -> Result<Self, NumError> {
        let d = self.det();
        let eps = rel_eps * self.norm_sqr();
        if !(d.norm() > eps) {
            return Err(NumError::SingularQuaternion { det: d.norm(), eps });
        }
        let inv = 1.0 / d;
        Ok(Self::new(self.qbb * inv, -self.q1b * inv, -self.qb1 * inv, self.q11 * inv))
    }

    pub fn max_abs_diff(self, o: Self) -> f64 {
        let d = self.sub(o);
        d.q11.norm().max(d.q1b.norm()).max(d.qb1.norm()).max(d.qbb.norm())
    }
}

/// 4x4 complex matrix indexed by the pairs (alpha, mu) -> 2*alpha + mu.
pub type Mat4 = [[C64; 4]; 4];

pub fn mat4_zero() -> Mat4 {
    [[C64::new(0.0, 0.0); 4]; 4]
}

pub fn mat4_identity() -> Mat4 {
    let mut m = mat4_zero();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    m
}

pub fn mat4_diag(d: [C64; 4]) -> Mat4 {
    let mut m = mat4_zero();
    for i in 0..4 {
        m[i][i] = d[i];
    }
    m
}

/// (A (x) B)[(a,m),(b,n)] = A[a][b] * B[m][n].
pub fn kron(a: Quaternion22, b: Quaternion22) -> Mat4 {
    let a = a.to_array();
    let b = b.to_array();
    let mut m = mat4_zero();
    for al in 0..2 {
        for mu in 0..2 {
            for be in 0..2 {
                for nu in 0..2 {
                    m[2 * al + mu][2 * be + nu] = a[al][be] * b[mu][nu];
                }
            }
        }
    }
    m
}

pub fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut m = mat4_zero();
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            for j in 0..4 {
                m[i][j] += aik * b[k][j];
            }
        }
    }
    m
}

pub fn mat4_sub(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut m = *a;
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] -= b[i][j];
        }
    }
    m
}

pub fn mat4_max_abs(a: &Mat4) -> f64 {
    a.iter().flatten().fold(0.0, |m, x| m.max(x.norm()))
}

/// LU with partial pivoting; returns (lu, perm, sign) or None if singular.
fn mat4_lu(a: &Mat4) -> Option<(Mat4, [usize; 4], f64)> {
    let mut lu = *a;
    let mut perm = [0, 1, 2, 3];
    let mut sign = 1.0;
    let scale = mat4_max_abs(a).max(f64::MIN_POSITIVE);
    for k in 0..4 {
        let p = (k..4).max_by(|&i, &j| lu[i][k].norm().total_cmp(&lu[j][k].norm()))?;
        if !(lu[p][k].norm() > 1e-300 * scale) {
            return None;
        }
        if p != k {
            lu.swap(p, k);
            perm.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..4 {
            let f = lu[i][k] / lu[k][k];
            lu[i][k] = f;
            for j in k + 1..4 {
                let t = lu[k][j];
                lu[i][j] -= f * t;
            }
        }
    }
    Some((lu, perm, sign))
}

pub fn mat4_det(a: &Mat4) -> C64 {
    match mat4_lu(a) {
        Some((lu, _, s)) => (0..4).fold(C64::new(s, 0.0), |d, i| d * lu[i][i]),
        None => C64::new(0.0, 0.0),
    }
}

/// Solves A X = B for X.
pub fn mat4_solve(a: &Mat4, b: &Mat4) -> Result<Mat4, NumError> {
    let (lu, perm, _) = mat4_lu(a).ok_or(NumError::Singular4)?;
    let mut x = mat4_zero();
    for col in 0..4 {
        let mut y = [C64::new(0.0, 0.0); 4];
        for i in 0..4 {
            let mut s = b[perm[i]][col];
            for j in 0..i {
                s -= lu[i][j] * y[j];
            }
            y[i] = s;
        }
        for i in (0..4).rev() {
            let mut s = y[i];
            for j in i + 1..4 {
                s -= lu[i][j] * x[j][col];
            }
            x[i][col] = s / lu[i][i];
        }
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(NumError::NonFinite);
    }
    Ok(x)
}

pub fn mat4_inverse(a: &Mat4) -> Result<Mat4, NumError> {
    mat4_solve(a, &mat4_identity())
}

/// Spectral radius estimate ||A^64||^(1/64) by repeated squaring.
pub fn mat4_spectral_radius(a: &Mat4) -> f64 {
    let mut q = *a;
    let mut log_norm = 0.0;
    for _ in 0..6 {
        let n = mat4_max_abs(&q);
        if !(n > 0.0) || !n.is_finite() {
            return if n == 0.0 { 0.0 } else { f64::INFINITY };
        }
        log_norm = 2.0 * (log_norm + n.ln());
        for row in q.iter_mut() {
            for v in row.iter_mut() {
                *v /= n;
            }
        }
        q = mat4_mul(&q, &q);
    }
    let n = mat4_max_abs(&q);
    if n == 0.0 {
        return 0.0;
    }
    ((log_norm + n.ln()) / 64.0).exp()
}

/// Mixed Wirtinger derivative d/d(conj z1) d/d(z2) by a 16-point central
/// stencil with step h. Truncation error is O(h^2).
pub fn wirtinger_mixed_derivative<E, F>(f: F, z1: C64, z2: C64, h: f64) -> Result<C64, E>
where
    F: Fn(C64, C64) -> Result<C64, E>,
{
    let dirs = [C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
    let mut d = [[C64::new(0.0, 0.0); 2]; 2];
    for (a, da) in dirs.iter().enumerate() {
        for (b, db) in dirs.iter().enumerate() {
            let e1 = da * h;
            let e2 = db * h;
            let v = f(z1 + e1, z2 + e2)? - f(z1 + e1, z2 - e2)? - f(z1 - e1, z2 + e2)?
                + f(z1 - e1, z2 - e2)?;
            d[a][b] = v / (4.0 * h * h);
        }
    }
    // d_{zbar1} = (d_x1 + i d_y1)/2, d_{z2} = (d_x2 - i d_y2)/2
    Ok((d[0][0] - I * d[0][1] + I * d[1][0] + d[1][1]) * 0.25)
}

/// Richardson-extrapolated mixed derivative (steps h and h/2), O(h^4).
pub fn wirtinger_mixed_richardson<E, F>(f: F, z1: C64, z2: C64, h: f64) -> Result<C64, E>
where
    F: Fn(C64, C64) -> Result<C64, E>,
{
    let a = wirtinger_mixed_derivative(&f, z1, z2, h)?;
    let b = wirtinger_mixed_derivative(&f, z1, z2, 0.5 * h)?;
    Ok((4.0 * b - a) / 3.0)
}

/// Per-bin complex sums split into batches so that batch-means error bars
/// can be formed. Batches are assigned by sample id modulo `nbatch`.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulator {
    pub nbins: usize,
    pub nbatch: usize,
    pub sums: Vec<C64>,
    pub counts: Vec<u64>,
    pub batch_samples: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinStat {
    pub mean: C64,
    pub stderr: f64,
    pub count: u64,
}

impl Accumulator {
    pub fn new(nbins: usize, nbatch: usize) -> Self {
        assert!(nbatch >= 1);
        Self {
            nbins,
            nbatch,
            sums: vec![C64::new(0.0, 0.0); nbins * nbatch],
            counts: vec![0; nbins],
            batch_samples: vec![0; nbatch],
        }
    }

    pub fn batch_of(&self, sample_id: u64) -> usize {
        (sample_id % self.nbatch as u64) as usize
    }

    pub fn add(&mut self, batch: usize, bin: usize, w: C64) {
        self.sums[batch * self.nbins + bin] += w;
        self.counts[bin] += 1;
    }

    pub fn finish_sample(&mut self, batch: usize) {
        self.batch_samples[batch] += 1;
    }

    pub fn total_samples(&self) -> u64 {
        self.batch_samples.iter().sum()
    }

    pub fn merge(&mut self, o: &Self) {
        assert_eq!((self.nbins, self.nbatch), (o.nbins, o.nbatch), "incompatible accumulators");
        for (a, b) in self.sums.iter_mut().zip(&o.sums) {
            *a += b;
        }
        for (a, b) in self.counts.iter_mut().zip(&o.counts) {
            *a += b;
        }
        for (a, b) in self.batch_samples.iter_mut().zip(&o.batch_samples) {
            *a += b;
        }
    }

    /// Per-sample mean of each bin's sum, scaled by `norm[bin]`, with the
    /// batch-means standard error.
    pub fn stats(&self, norm: &[f64]) -> Vec<BinStat> {
        let n = self.total_samples() as f64;
        let live: Vec<usize> = (0..self.nbatch).filter(|&b| self.batch_samples[b] > 0).collect();
        (0..self.nbins)
            .map(|bin| {
                let tot: C64 = (0..self.nbatch).map(|b| self.sums[b * self.nbins + bin]).sum();
                let mean = if n > 0.0 { tot / n } else { C64::new(0.0, 0.0) };
                let stderr = if live.len() >= 2 {
                    let k = live.len() as f64;
                    let ms: Vec<C64> = live
                        .iter()
                        .map(|&b| self.sums[b * self.nbins + bin] / self.batch_samples[b] as f64)
                        .collect();
                    let mm: C64 = ms.iter().sum::<C64>() / k;
                    let var = ms.iter().map(|m| (m - mm).norm_sqr()).sum::<f64>() / (k - 1.0);
                    (var / k).sqrt()
                } else {
                    f64::NAN
                };
                BinStat { mean: mean * norm[bin], stderr: stderr * norm[bin].abs(), count: self.counts[bin] }
            })
            .collect()
    }
}

/// Pair binning over C x C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PairBinning {
    /// Product of two disks of common radius around the given centre pairs.
    Disks { centers: Vec<(C64, C64)>, radius: f64 },
    /// (|z|, |w|, arg z - arg w mod 2pi) bins.
    Radial { r_edges: Vec<f64>, phi_edges: Vec<f64> },
    /// Real parts only, for real spectra: (Re z, Re w) on a grid.
    RealGrid { x_edges: Vec<f64>, y_edges: Vec<f64> },
}

fn find_bin(edges: &[f64], x: f64) -> Option<usize> {
    if edges.len() < 2 || !(x >= edges[0]) || !(x < edges[edges.len() - 1]) {
        return None;
    }
    let i = edges.partition_point(|&e| e <= x);
    Some(i - 1)
}

impl PairBinning {
    pub fn nbins(&self) -> usize {
        match self {
            PairBinning::Disks { centers, .. } => centers.len(),
            PairBinning::Radial { r_edges, phi_edges } => {
                let nr = r_edges.len().saturating_sub(1);
                nr * nr * phi_edges.len().saturating_sub(1)
            }
            PairBinning::RealGrid { x_edges, y_edges } => {
                x_edges.len().saturating_sub(1) * y_edges.len().saturating_sub(1)
            }
        }
    }

    /// Every bin containing (z, w); disks may overlap so several can match.
    pub fn bins_of(&self, z: C64, w: C64, out: &mut Vec<usize>) {
        out.clear();
        match self {
            PairBinning::Disks { centers, radius } => {
                for (i, (a, b)) in centers.iter().enumerate() {
                    if (z - a).norm() < *radius && (w - b).norm() < *radius {
                        out.push(i);
                    }
                }
            }
            PairBinning::Radial { r_edges, phi_edges } => {
                let nr = r_edges.len() - 1;
                let np = phi_edges.len() - 1;
                let (Some(i), Some(j)) = (find_bin(r_edges, z.norm()), find_bin(r_edges, w.norm())) else {
                    return;
                };
                let dphi = (z.arg() - w.arg()).rem_euclid(std::f64::consts::TAU);
                if let Some(k) = find_bin(phi_edges, dphi) {
                    out.push((i * nr + j) * np + k);
                }
            }
            PairBinning::RealGrid { x_edges, y_edges } => {
                let ny = y_edges.len() - 1;
                if let (Some(i), Some(j)) = (find_bin(x_edges, z.re), find_bin(y_edges, w.re)) {
                    out.push(i * ny + j);
                }
            }
        }
    }

    /// Lebesgue measure of each bin in C x C (or R x R for RealGrid).
    pub fn volume(&self, bin: usize) -> f64 {
        match self {
            PairBinning::Disks { radius, .. } => (std::f64::consts::PI * radius * radius).powi(2),
            PairBinning::Radial { r_edges, phi_edges } => {
                let nr = r_edges.len() - 1;
                let np = phi_edges.len() - 1;
                let k = bin % np;
                let j = (bin / np) % nr;
                let i = bin / np / nr;
                let ann = |a: f64, b: f64| 0.5 * (b * b - a * a);
                ann(r_edges[i], r_edges[i + 1])
                    * ann(r_edges[j], r_edges[j + 1])
                    * std::f64::consts::TAU
                    * (phi_edges[k + 1] - phi_edges[k])
            }
            PairBinning::RealGrid { x_edges, y_edges } => {
                let ny = y_edges.len() - 1;
                let (i, j) = (bin / ny, bin % ny);
                (x_edges[i + 1] - x_edges[i]) * (y_edges[j + 1] - y_edges[j])
            }
        }
    }
}

/// Accumulated pair weights with their binning.
#[derive(Debug, Clone, PartialEq)]
pub struct PairHistogram {
    pub binning: PairBinning,
    pub acc: Accumulator,
}

impl PairHistogram {
    pub fn new(binning: PairBinning, nbatch: usize) -> Self {
        let n = binning.nbins();
        Self { binning, acc: Accumulator::new(n, nbatch) }
    }

    pub fn merge(&mut self, o: &Self) {
        assert_eq!(self.binning, o.binning, "histograms have different bin edges");
        self.acc.merge(&o.acc);
    }
}

/// Seed plus stream index; each (seed, stream) pair yields an independent,
/// reproducible generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { t } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (t * pn - pn1) / (t * t - 1.0);
            let dt = pn / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// log|det A| and the unit phase of det A for a dense row-major n x n
/// matrix, by LU with partial pivoting. A is overwritten.
pub fn log_det(a: &mut [C64], n: usize) -> (f64, C64) {
    assert_eq!(a.len(), n * n);
    let mut log_abs = 0.0;
    let mut phase = C64::new(1.0, 0.0);
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm())).unwrap();
        let piv = a[p * n + k];
        if piv.norm() == 0.0 {
            return (f64::NEG_INFINITY, C64::new(0.0, 0.0));
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            phase = -phase;
        }
        log_abs += piv.norm().ln();
        phase *= piv / piv.norm();
        for i in k + 1..n {
            let f = a[i * n + k] / piv;
            if f.norm() == 0.0 {
                continue;
            }
            for j in k + 1..n {
                let t = a[k * n + j];
                a[i * n + j] -= f * t;
            }
        }
    }
    (log_abs, phase)
}

/// ln(n!) for small integer n by direct summation.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn quaternion_inverse_examples() {
        let id = Quaternion22::identity();
        assert_eq!(id.inverse().unwrap(), id);
        let q = Quaternion22::diag(c(2.0, 0.0), c(2.0, 0.0));
        assert!(q.inverse().unwrap().max_abs_diff(Quaternion22::diag(c(0.5, 0.0), c(0.5, 0.0))) < 1e-15);
        let q = Quaternion22::new(c(0.0, 0.0), I, I, c(0.0, 0.0));
        let inv = q.inverse().unwrap();
        assert!(inv.max_abs_diff(Quaternion22::new(c(0.0, 0.0), -I, -I, c(0.0, 0.0))) < 1e-15);
        assert!(q.mul(inv).max_abs_diff(id) < 1e-12);
    }

    #[test]
    fn singular_quaternion_is_rejected() {
        let q = Quaternion22::new(c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(2.0, 0.0));
        assert!(matches!(q.inverse(), Err(NumError::SingularQuaternion { .. })));
    }

    #[test]
    fn physical_argument_is_on_shell() {
        let q = Quaternion22::from_point(c(0.3, -0.2), c(0.1, 0.4));
        assert!(q.is_on_shell(1e-15));
        assert!((q.det().re - (0.13 + 0.17)).abs() < 1e-15);
    }

    #[test]
    fn kron_layout() {
        let a = Quaternion22::new(c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0));
        let b = Quaternion22::new(c(5.0, 0.0), c(6.0, 0.0), c(7.0, 0.0), c(8.0, 0.0));
        let k = kron(a, b);
        assert_eq!(k[1][1], c(8.0, 0.0));
        assert_eq!(k[1][2], c(2.0 * 7.0, 0.0));
        assert_eq!(k[2][1], c(3.0 * 6.0, 0.0));
    }

    #[test]
    fn mat4_solve_roundtrip() {
        let mut a = mat4_zero();
        for i in 0..4 {
            for j in 0..4 {
                a[i][j] = c(((i * 7 + j * 3) % 5) as f64 - 1.5, (i as f64 - j as f64) * 0.3);
            }
            a[i][i] += c(4.0, 0.0);
        }
        let inv = mat4_inverse(&a).unwrap();
        let p = mat4_mul(&a, &inv);
        assert!(mat4_max_abs(&mat4_sub(&p, &mat4_identity())) < 1e-13);
        let d = mat4_det(&a);
        let d2 = mat4_det(&inv);
        assert!(close(d * d2, c(1.0, 0.0), 1e-12));
    }

    #[test]
    fn spectral_radius_of_diagonal() {
        let m = mat4_diag([c(0.5, 0.0), c(0.0, -0.25), c(0.1, 0.1), c(0.0, 0.0)]);
        assert!((mat4_spectral_radius(&m) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn wirtinger_exact_on_bilinear() {
        let f = |a: C64, b: C64| Ok::<_, ()>(a.conj() * b);
        let d = wirtinger_mixed_derivative(f, c(0.3, 0.1), c(-0.2, 0.5), 1e-3).unwrap();
        assert!(close(d, c(1.0, 0.0), 1e-9));
        let g = |a: C64, b: C64| Ok::<_, ()>(a * b);
        let d = wirtinger_mixed_derivative(g, c(0.3, 0.1), c(-0.2, 0.5), 1e-3).unwrap();
        assert!(d.norm() < 1e-9);
    }

    #[test]
    fn wirtinger_second_order_convergence() {
        // f = |z1|^4 |z2|^2 conj(z2)... d_{zbar1} d_{z2} of (z1 zbar1)^2 (z2 zbar2)^2
        // = 2 |z1|^2 z1 * 2 |z2|^2 zbar2
        let f = |a: C64, b: C64| Ok::<_, ()>(C64::from(a.norm_sqr().powi(2) * b.norm_sqr().powi(2)));
        let (z1, z2) = (c(0.7, 0.2), c(-0.4, 0.9));
        let exact = 4.0 * z1.norm_sqr() * z1 * z2.norm_sqr() * z2.conj();
        let e1 = (wirtinger_mixed_derivative(f, z1, z2, 1e-2).unwrap() - exact).norm();
        let e2 = (wirtinger_mixed_derivative(f, z1, z2, 5e-3).unwrap() - exact).norm();
        let ratio = e1 / e2;
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
        let r = wirtinger_mixed_richardson(f, z1, z2, 1e-2).unwrap();
        assert!((r - exact).norm() < 1e-7);
    }

    #[test]
    fn accumulator_merge_matches_single_pass() {
        let mut all = Accumulator::new(3, 4);
        let mut a = Accumulator::new(3, 4);
        let mut b = Accumulator::new(3, 4);
        for s in 0..40u64 {
            let batch = all.batch_of(s);
            let w = c((s as f64).sin(), (s as f64 * 0.3).cos());
            let bin = (s % 3) as usize;
            all.add(batch, bin, w);
            all.finish_sample(batch);
            let t = if s % 2 == 0 { &mut a } else { &mut b };
            t.add(batch, bin, w);
            t.finish_sample(batch);
        }
        a.merge(&b);
        let s1 = all.stats(&[1.0; 3]);
        let s2 = a.stats(&[1.0; 3]);
        for (x, y) in s1.iter().zip(&s2) {
            assert!((x.mean - y.mean).norm() < 1e-12);
            assert!((x.stderr - y.stderr).abs() < 1e-12);
            assert_eq!(x.count, y.count);
        }
    }

    #[test]
    fn radial_pair_volume_sums_to_full_annulus() {
        let b = PairBinning::Radial { r_edges: vec![0.0, 0.5, 1.0], phi_edges: vec![0.0, 1.0, std::f64::consts::TAU] };
        let tot: f64 = (0..b.nbins()).map(|i| b.volume(i)).sum();
        let pi = std::f64::consts::PI;
        assert!((tot - pi * pi).abs() < 1e-12);
        let mut out = Vec::new();
        b.bins_of(c(0.7, 0.0), c(0.2, 0.0), &mut out);
        assert_eq!(out, vec![(1 * 2 + 0) * 2]);
    }

    #[test]
    fn rng_stream_is_reproducible() {
        use rand::Rng;
        let a: Vec<u64> = (0..4).map(|_| 0).scan(RngStream::new(7, 3).rng(), |r, _: u64| Some(r.random())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(RngStream::new(7, 3).rng(), |r, _: u64| Some(r.random())).collect();
        let d: Vec<u64> = (0..4).map(|_| 0).scan(RngStream::new(7, 4).rng(), |r, _: u64| Some(r.random())).collect();
        assert_eq!(a, b);
        assert_ne!(a, d);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(4);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(2)).sum();
        assert!((s - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn log_det_of_known_matrix() {
        let mut a = vec![c(2.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(3.0, 0.0)];
        let (l, p) = log_det(&mut a, 2);
        let d = p * l.exp();
        assert!(close(d, c(6.0, -1.0), 1e-13));
    }
}

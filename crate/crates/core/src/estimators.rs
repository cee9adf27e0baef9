//! Monte Carlo estimators of rho, O1, O2, the traced resolvent product and
//! trace covariances, with batch-means error bars.

use crate::numcore::{Accumulator, PairBinning, PairHistogram, C64};
use crate::overlaps::SampleOverlaps;
use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, MatRef};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

pub const DEFAULT_BATCHES: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid binning: {0}")]
    Binning(String),
    #[error("cannot parse word {0:?}")]
    Word(String),
    #[error("matrix size mismatch")]
    Shape,
}

/// Read-only access to one sample's eigenvalues and overlaps.
pub trait SampleView: Sync {
    fn sample_id(&self) -> u64;
    fn n(&self) -> usize;
    fn eigenvalues(&self) -> &[C64];
    fn diag_overlap(&self, k: usize) -> f64;
    /// Calls `f(lambda_k, lambda_l, O_kl)` for every stored pair k != l.
    fn for_each_pair(&self, f: &mut dyn FnMut(C64, C64, C64));
}

impl SampleView for SampleOverlaps {
    fn sample_id(&self) -> u64 {
        self.sample_id
    }
    fn n(&self) -> usize {
        self.eigenvalues.len()
    }
    fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }
    fn diag_overlap(&self, k: usize) -> f64 {
        self.overlaps.get(k, k).re
    }
    fn for_each_pair(&self, f: &mut dyn FnMut(C64, C64, C64)) {
        let ev = &self.eigenvalues;
        for k in 0..ev.len() {
            for l in 0..ev.len() {
                if k != l {
                    f(ev[k], ev[l], self.overlaps.get(k, l));
                }
            }
        }
    }
}

/// A sample as stored on disk: eigenvalues, diagonal overlaps and an
/// optionally thinned list of off-diagonal pairs (k, l, O_kl).
#[derive(Debug, Clone, Default)]
pub struct SampleRecord {
    pub sample_id: u64,
    pub eigenvalues: Vec<C64>,
    pub diag: Vec<f64>,
    pub pairs: Vec<(usize, usize, C64)>,
}

impl SampleView for SampleRecord {
    fn sample_id(&self) -> u64 {
        self.sample_id
    }
    fn n(&self) -> usize {
        self.eigenvalues.len()
    }
    fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }
    fn diag_overlap(&self, k: usize) -> f64 {
        self.diag[k]
    }
    fn for_each_pair(&self, f: &mut dyn FnMut(C64, C64, C64)) {
        for &(k, l, o) in &self.pairs {
            if k != l {
                f(self.eigenvalues[k], self.eigenvalues[l], o);
            }
        }
    }
}

/// Single-point bins on the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PointBinning {
    /// Annuli |z| in [r_i, r_{i+1}).
    Radial { edges: Vec<f64> },
    /// Rectangles in (Re z, Im z).
    Grid { x_edges: Vec<f64>, y_edges: Vec<f64> },
    /// Intervals of Re z, for real spectra; the density is per unit length.
    RealAxis { edges: Vec<f64> },
}

fn find_bin(edges: &[f64], x: f64) -> Option<usize> {
    if edges.len() < 2 || !(x >= edges[0]) || !(x < edges[edges.len() - 1]) {
        return None;
    }
    Some(edges.partition_point(|&e| e <= x) - 1)
}

fn check_edges(e: &[f64]) -> Result<(), EstimatorError> {
    if e.len() < 2 || e.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(EstimatorError::Binning("edges must be strictly increasing with at least 2 entries".into()));
    }
    Ok(())
}

impl PointBinning {
    pub fn validate(&self) -> Result<(), EstimatorError> {
        match self {
            PointBinning::Radial { edges } => {
                check_edges(edges)?;
                if edges[0] < 0.0 {
                    return Err(EstimatorError::Binning("radii must be non-negative".into()));
                }
                Ok(())
            }
            PointBinning::Grid { x_edges, y_edges } => {
                check_edges(x_edges)?;
                check_edges(y_edges)
            }
            PointBinning::RealAxis { edges } => check_edges(edges),
        }
    }

    pub fn nbins(&self) -> usize {
        match self {
            PointBinning::Radial { edges } | PointBinning::RealAxis { edges } => edges.len() - 1,
            PointBinning::Grid { x_edges, y_edges } => (x_edges.len() - 1) * (y_edges.len() - 1),
        }
    }

    pub fn bin_of(&self, z: C64) -> Option<usize> {
        match self {
            PointBinning::Radial { edges } => find_bin(edges, z.norm()),
            PointBinning::RealAxis { edges } => find_bin(edges, z.re),
            PointBinning::Grid { x_edges, y_edges } => {
                let ny = y_edges.len() - 1;
                Some(find_bin(x_edges, z.re)? * ny + find_bin(y_edges, z.im)?)
            }
        }
    }

    pub fn measure(&self, bin: usize) -> f64 {
        match self {
            PointBinning::Radial { edges } => PI * (edges[bin + 1].powi(2) - edges[bin].powi(2)),
            PointBinning::RealAxis { edges } => edges[bin + 1] - edges[bin],
            PointBinning::Grid { x_edges, y_edges } => {
                let ny = y_edges.len() - 1;
                let (i, j) = (bin / ny, bin % ny);
                (x_edges[i + 1] - x_edges[i]) * (y_edges[j + 1] - y_edges[j])
            }
        }
    }

    /// Bin midpoint coordinates.
    pub fn coords(&self, bin: usize) -> Vec<f64> {
        let mid = |e: &[f64], i: usize| 0.5 * (e[i] + e[i + 1]);
        match self {
            PointBinning::Radial { edges } | PointBinning::RealAxis { edges } => vec![mid(edges, bin)],
            PointBinning::Grid { x_edges, y_edges } => {
                let ny = y_edges.len() - 1;
                vec![mid(x_edges, bin / ny), mid(y_edges, bin % ny)]
            }
        }
    }
}

/// Coordinates describing a pair bin: disk centres (4 numbers), radial
/// midpoints (r1, r2, dphi) or grid midpoints (x, y).
pub fn pair_coords(b: &PairBinning, bin: usize) -> Vec<f64> {
    let mid = |e: &[f64], i: usize| 0.5 * (e[i] + e[i + 1]);
    match b {
        PairBinning::Disks { centers, .. } => {
            let (a, c) = centers[bin];
            vec![a.re, a.im, c.re, c.im]
        }
        PairBinning::Radial { r_edges, phi_edges } => {
            let nr = r_edges.len() - 1;
            let np = phi_edges.len() - 1;
            vec![mid(r_edges, bin / np / nr), mid(r_edges, (bin / np) % nr), mid(phi_edges, bin % np)]
        }
        PairBinning::RealGrid { x_edges, y_edges } => {
            let ny = y_edges.len() - 1;
            vec![mid(x_edges, bin / ny), mid(y_edges, bin % ny)]
        }
    }
}

pub fn validate_pair_binning(b: &PairBinning) -> Result<(), EstimatorError> {
    match b {
        PairBinning::Disks { centers, radius } => {
            if centers.is_empty() || !(*radius > 0.0) {
                return Err(EstimatorError::Binning("disk binning needs centres and a positive radius".into()));
            }
            Ok(())
        }
        PairBinning::Radial { r_edges, phi_edges } => {
            check_edges(r_edges)?;
            check_edges(phi_edges)?;
            if phi_edges[0] < 0.0 || phi_edges[phi_edges.len() - 1] > TAU + 1e-12 {
                return Err(EstimatorError::Binning("angle edges must lie in [0, 2pi]".into()));
            }
            Ok(())
        }
        PairBinning::RealGrid { x_edges, y_edges } => {
            check_edges(x_edges)?;
            check_edges(y_edges)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinEstimate {
    pub coords: Vec<f64>,
    pub value: C64,
    pub stderr: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateTable {
    pub rows: Vec<BinEstimate>,
    pub samples: u64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub nbatch: usize,
    /// Minimum |lambda_k - lambda_l| for a pair to enter O2.
    pub dmin: f64,
}

impl EstimatorConfig {
    /// dmin = 5/sqrt(N), a few mean spacings.
    pub fn for_size(n: usize) -> Self {
        Self { nbatch: DEFAULT_BATCHES, dmin: 5.0 / (n as f64).sqrt() }
    }
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { nbatch: DEFAULT_BATCHES, dmin: 0.0 }
    }
}

fn point_estimate<S: SampleView>(
    samples: &[S],
    binning: &PointBinning,
    nbatch: usize,
    weight: impl Fn(&S, usize) -> f64 + Sync,
) -> Result<EstimateTable, EstimatorError> {
    if samples.len() < 2 {
        return Err(EstimatorError::TooFewSamples(samples.len()));
    }
    binning.validate()?;
    let nb = binning.nbins();
    let acc = samples
        .par_iter()
        .fold(
            || Accumulator::new(nb, nbatch),
            |mut acc, s| {
                let b = acc.batch_of(s.sample_id());
                for (k, &z) in s.eigenvalues().iter().enumerate() {
                    if let Some(bin) = binning.bin_of(z) {
                        acc.add(b, bin, C64::new(weight(s, k), 0.0));
                    }
                }
                acc.finish_sample(b);
                acc
            },
        )
        .reduce(
            || Accumulator::new(nb, nbatch),
            |mut a, b| {
                a.merge(&b);
                a
            },
        );
    let norm: Vec<f64> = (0..nb).map(|i| 1.0 / binning.measure(i)).collect();
    let stats = acc.stats(&norm);
    let mut warnings = Vec::new();
    if stats.iter().all(|s| s.count == 0) {
        warnings.push("no eigenvalue fell inside the binned region".to_string());
    }
    let rows = stats
        .iter()
        .enumerate()
        .map(|(i, s)| BinEstimate { coords: binning.coords(i), value: s.mean, stderr: s.stderr, count: s.count })
        .collect();
    Ok(EstimateTable { rows, samples: acc.total_samples(), warnings })
}

/// rho(z) = <(1/N) sum_k delta(z - lambda_k)>.
pub fn estimate_density<S: SampleView>(
    samples: &[S],
    binning: &PointBinning,
    cfg: &EstimatorConfig,
) -> Result<EstimateTable, EstimatorError> {
    point_estimate(samples, binning, cfg.nbatch, |s, _| 1.0 / s.n() as f64)
}

/// O1(z) = <(1/N) sum_k O_kk delta(z - lambda_k)> / N.
pub fn estimate_o1<S: SampleView>(
    samples: &[S],
    binning: &PointBinning,
    cfg: &EstimatorConfig,
) -> Result<EstimateTable, EstimatorError> {
    point_estimate(samples, binning, cfg.nbatch, |s, k| {
        let n = s.n() as f64;
        s.diag_overlap(k) / (n * n)
    })
}

/// Raw pair histogram of (1/N) sum_{k != l} O_kl over pairs with
/// |lambda_k - lambda_l| >= dmin.
pub fn accumulate_o2<S: SampleView>(samples: &[S], binning: &PairBinning, cfg: &EstimatorConfig) -> PairHistogram {
    let empty = || PairHistogram::new(binning.clone(), cfg.nbatch);
    samples
        .par_iter()
        .fold(empty, |mut h, s| {
            let b = h.acc.batch_of(s.sample_id());
            let inv_n = 1.0 / s.n() as f64;
            let mut bins = Vec::new();
            let acc = &mut h.acc;
            s.for_each_pair(&mut |zk, zl, o| {
                if (zk - zl).norm() < cfg.dmin {
                    return;
                }
                binning.bins_of(zk, zl, &mut bins);
                for &bin in &bins {
                    acc.add(b, bin, o * inv_n);
                }
            });
            acc.finish_sample(b);
            h
        })
        .reduce(empty, |mut a, b| {
            a.merge(&b);
            a
        })
}

/// O2(z, w) = <(1/N) sum_{k != l} O_kl delta(z - lambda_k) delta(w - lambda_l)>
/// averaged over each pair bin.
pub fn estimate_o2<S: SampleView>(
    samples: &[S],
    binning: &PairBinning,
    cfg: &EstimatorConfig,
) -> Result<EstimateTable, EstimatorError> {
    if samples.len() < 2 {
        return Err(EstimatorError::TooFewSamples(samples.len()));
    }
    validate_pair_binning(binning)?;
    let h = accumulate_o2(samples, binning, cfg);
    Ok(pair_table(&h))
}

pub fn pair_table(h: &PairHistogram) -> EstimateTable {
    let nb = h.binning.nbins();
    let norm: Vec<f64> = (0..nb).map(|i| 1.0 / h.binning.volume(i)).collect();
    let stats = h.acc.stats(&norm);
    let mut warnings = Vec::new();
    if stats.iter().all(|s| s.count == 0) {
        warnings.push("no eigenvalue pair fell inside the binned region".to_string());
    }
    let rows = stats
        .iter()
        .enumerate()
        .map(|(i, s)| BinEstimate { coords: pair_coords(&h.binning, i), value: s.mean, stderr: s.stderr, count: s.count })
        .collect();
    EstimateTable { rows, samples: h.acc.total_samples(), warnings }
}

/// Per-sample check of sum_l O_kl = 1; returns the worst residual.
pub fn sum_rule_residual(s: &SampleOverlaps) -> f64 {
    s.overlaps.row_sum_residual()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarEstimate {
    pub value: C64,
    pub stderr: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HprodEstimate {
    pub estimate: ScalarEstimate,
    /// Samples having an eigenvalue within the margin of z1 or z2.
    pub near_spectrum: usize,
}

fn batch_mean(values: &[C64], ids: &[u64], nbatch: usize) -> ScalarEstimate {
    let mut acc = Accumulator::new(1, nbatch);
    for (v, id) in values.iter().zip(ids) {
        let b = acc.batch_of(*id);
        acc.add(b, 0, *v);
        acc.finish_sample(b);
    }
    let s = acc.stats(&[1.0])[0];
    ScalarEstimate { value: s.mean, stderr: s.stderr, samples: values.len() }
}

fn shifted_inverse(x: MatRef<'_, C64>, z: C64) -> Mat<C64> {
    let n = x.nrows();
    let a = Mat::from_fn(n, n, |i, j| if i == j { z - x[(i, j)] } else { -x[(i, j)] });
    a.partial_piv_lu().inverse()
}

/// (1/N) Tr[(z1 - X)^-1 (conj z2 - X^dagger)^-1] for one matrix.
pub fn traced_resolvent_product(x: MatRef<'_, C64>, z1: C64, z2: C64) -> C64 {
    let n = x.nrows();
    let a = shifted_inverse(x, z1);
    let c = shifted_inverse(x, z2);
    let mut s = C64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            s += a[(i, j)] * c[(i, j)].conj();
        }
    }
    s / n as f64
}

/// MC mean of the traced resolvent product over `(sample_id, X)` pairs.
/// With `margin = Some(d)` the eigenvalues are computed and samples with
/// an eigenvalue closer than d to z1 or z2 are counted.
pub fn estimate_traced_resolvent_product(
    mats: &[(u64, Mat<C64>)],
    z1: C64,
    z2: C64,
    margin: Option<f64>,
    cfg: &EstimatorConfig,
) -> Result<HprodEstimate, EstimatorError> {
    if mats.len() < 2 {
        return Err(EstimatorError::TooFewSamples(mats.len()));
    }
    let per: Vec<(C64, bool)> = mats
        .par_iter()
        .map(|(_, x)| {
            let near = match margin {
                Some(d) => x
                    .eigenvalues()
                    .map(|ev| ev.iter().any(|l| (l - z1).norm() < d || (l - z2).norm() < d))
                    .unwrap_or(true),
                None => false,
            };
            (traced_resolvent_product(x.as_ref(), z1, z2), near)
        })
        .collect();
    let vals: Vec<C64> = per.iter().map(|p| p.0).collect();
    let ids: Vec<u64> = mats.iter().map(|m| m.0).collect();
    Ok(HprodEstimate {
        estimate: batch_mean(&vals, &ids, cfg.nbatch),
        near_spectrum: per.iter().filter(|p| p.1).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Letter {
    X,
    Xd,
}

/// Parses a word over {X, X^dagger}; accepted spellings for the adjoint are
/// "Xd", "X†", "X^", "X*". "1" or "" is the empty word.
pub fn parse_word(s: &str) -> Result<Vec<Letter>, EstimatorError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() || t == "1" {
        return Ok(Vec::new());
    }
    let ch: Vec<char> = t.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < ch.len() {
        if ch[i] != 'X' {
            return Err(EstimatorError::Word(s.to_string()));
        }
        if i + 1 < ch.len() && matches!(ch[i + 1], 'd' | '†' | '^' | '*') {
            out.push(Letter::Xd);
            i += 2;
        } else {
            out.push(Letter::X);
            i += 1;
        }
    }
    Ok(out)
}

/// (1/N) Tr of a word evaluated on X.
pub fn normalized_trace(x: MatRef<'_, C64>, word: &[Letter]) -> C64 {
    let n = x.nrows();
    if word.is_empty() {
        return C64::new(1.0, 0.0);
    }
    let xd = x.adjoint().to_owned();
    let pick = |l: &Letter| -> Mat<C64> {
        match l {
            Letter::X => x.to_owned(),
            Letter::Xd => xd.clone(),
        }
    };
    let mut p = pick(&word[0]);
    for l in &word[1..] {
        p = match l {
            Letter::X => &p * x,
            Letter::Xd => &p * &xd,
        };
    }
    let tr: C64 = (0..n).map(|i| p[(i, i)]).sum();
    tr / n as f64
}

/// Per-sample normalized traces of two words, `(sample_id, t1, t2)`.
pub fn trace_samples(mats: &[(u64, Mat<C64>)], word1: &[Letter], word2: &[Letter]) -> Vec<(u64, C64, C64)> {
    mats.par_iter()
        .map(|(id, x)| (*id, normalized_trace(x.as_ref(), word1), normalized_trace(x.as_ref(), word2)))
        .collect()
}

/// Connected covariance <t1 t2> - <t1><t2> from per-sample traces, with
/// batch-means error.
pub fn covariance_from_traces(t: &[(u64, C64, C64)], nbatch: usize) -> Result<ScalarEstimate, EstimatorError> {
    if t.len() < 2 {
        return Err(EstimatorError::TooFewSamples(t.len()));
    }
    let cov = |items: &[&(u64, C64, C64)]| -> C64 {
        let n = items.len() as f64;
        let m1: C64 = items.iter().map(|v| v.1).sum::<C64>() / n;
        let m2: C64 = items.iter().map(|v| v.2).sum::<C64>() / n;
        items.iter().map(|v| (v.1 - m1) * (v.2 - m2)).sum::<C64>() / (n - 1.0)
    };
    let all: Vec<&(u64, C64, C64)> = t.iter().collect();
    let value = cov(&all);
    let nb = nbatch.max(2);
    let batches: Vec<C64> = (0..nb)
        .filter_map(|b| {
            let items: Vec<&(u64, C64, C64)> = t.iter().filter(|v| (v.0 % nb as u64) as usize == b).collect();
            (items.len() >= 2).then(|| cov(&items))
        })
        .collect();
    let k = batches.len() as f64;
    let stderr = if batches.len() >= 2 {
        let m: C64 = batches.iter().sum::<C64>() / k;
        (batches.iter().map(|b| (b - m).norm_sqr()).sum::<f64>() / (k - 1.0) / k).sqrt()
    } else {
        f64::NAN
    };
    Ok(ScalarEstimate { value, stderr, samples: t.len() })
}

/// Connected covariance of the normalized traces of two words.
pub fn estimate_trace_covariance(
    mats: &[(u64, Mat<C64>)],
    word1: &[Letter],
    word2: &[Letter],
    cfg: &EstimatorConfig,
) -> Result<ScalarEstimate, EstimatorError> {
    covariance_from_traces(&trace_samples(mats, word1, word2), cfg.nbatch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::c;

    fn rec(id: u64, ev: Vec<C64>) -> SampleRecord {
        let n = ev.len();
        SampleRecord { sample_id: id, eigenvalues: ev, diag: vec![1.0; n], pairs: Vec::new() }
    }

    #[test]
    fn zero_matrix_density_sits_at_origin() {
        let samples: Vec<SampleRecord> = (0..4).map(|i| rec(i, vec![c(0.0, 0.0); 5])).collect();
        let b = PointBinning::Radial { edges: vec![0.0, 0.1, 0.5, 1.0] };
        let t = estimate_density(&samples, &b, &EstimatorConfig::default()).unwrap();
        let mass: Vec<f64> = (0..3).map(|i| t.rows[i].value.re * b.measure(i)).collect();
        assert!((mass[0] - 1.0).abs() < 1e-12);
        assert_eq!(mass[1], 0.0);
        assert_eq!(mass[2], 0.0);
    }

    #[test]
    fn too_few_samples() {
        let samples = vec![rec(0, vec![c(0.0, 0.0)])];
        let b = PointBinning::Radial { edges: vec![0.0, 1.0] };
        assert!(matches!(
            estimate_density(&samples, &b, &EstimatorConfig::default()),
            Err(EstimatorError::TooFewSamples(1))
        ));
    }

    #[test]
    fn empty_region_warns() {
        let samples: Vec<SampleRecord> = (0..3).map(|i| rec(i, vec![c(5.0, 0.0)])).collect();
        let b = PointBinning::Radial { edges: vec![0.0, 1.0] };
        let t = estimate_density(&samples, &b, &EstimatorConfig::default()).unwrap();
        assert_eq!(t.warnings.len(), 1);
    }

    #[test]
    fn normal_samples_have_zero_o2() {
        let samples: Vec<SampleRecord> = (0..3)
            .map(|i| {
                let mut r = rec(i, vec![c(0.1, 0.0), c(-0.1, 0.0)]);
                r.pairs = vec![(0, 1, c(0.0, 0.0)), (1, 0, c(0.0, 0.0))];
                r
            })
            .collect();
        let b = PairBinning::Disks { centers: vec![(c(0.1, 0.0), c(-0.1, 0.0))], radius: 0.05 };
        let t = estimate_o2(&samples, &b, &EstimatorConfig::default()).unwrap();
        assert_eq!(t.rows[0].value, c(0.0, 0.0));
        assert_eq!(t.rows[0].count, 3);
    }

    #[test]
    fn word_parsing() {
        assert_eq!(parse_word("XX").unwrap(), vec![Letter::X, Letter::X]);
        assert_eq!(parse_word("XdX†").unwrap(), vec![Letter::Xd, Letter::Xd]);
        assert_eq!(parse_word("X Xd").unwrap(), vec![Letter::X, Letter::Xd]);
        assert!(parse_word("1").unwrap().is_empty());
        assert!(parse_word("Y").is_err());
    }

    #[test]
    fn hprod_of_zero_matrix() {
        let x = Mat::<C64>::zeros(4, 4);
        let (z1, z2) = (c(2.0, 1.0), c(0.5, -3.0));
        let v = traced_resolvent_product(x.as_ref(), z1, z2);
        assert!((v - 1.0 / (z1 * z2.conj())).norm() < 1e-14);
    }

    #[test]
    fn identity_words_have_zero_covariance() {
        let mats: Vec<(u64, Mat<C64>)> =
            (0..10).map(|i| (i, Mat::from_fn(3, 3, |a, b| c((a + b + i as usize) as f64, 0.0)))).collect();
        let r = estimate_trace_covariance(&mats, &[], &[], &EstimatorConfig::default()).unwrap();
        assert_eq!(r.value, c(0.0, 0.0));
    }
}

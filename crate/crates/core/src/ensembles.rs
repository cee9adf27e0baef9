//! Seeded samplers for the non-Hermitian ensembles.
//!
//! Entry scale: every Gaussian block has complex entries with independent
//! real and imaginary parts of variance 1/(2N), so <|X_ij|^2> = 1/N.

use crate::numcore::{RngStream, C64};
use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EnsembleKind {
    Ginibre,
    Elliptic { sigma: f64, tau: f64 },
    InducedGinibre { alpha: f64 },
    TruncatedUnitary { kappa: f64 },
    Spherical,
    ProductGinibre,
    PseudoHermitianProduct,
    QuantumScattering { m: f64, gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub n: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("invalid ensemble parameters: {0}")]
    Invalid(String),
    #[error("spherical denominator stayed ill-conditioned after {0} redraws")]
    TooManyRejections(u32),
}

/// A sampled matrix plus the number of rejected spherical denominators.
#[derive(Debug, Clone)]
pub struct Sampled {
    pub matrix: Mat<C64>,
    pub rejections: u32,
}

pub const SPHERICAL_COND_LIMIT: f64 = 1e12;
const MAX_REJECTIONS: u32 = 64;

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, n: usize) -> Self {
        Self { kind, n }
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        let bad = |m: &str| Err(EnsembleError::Invalid(m.to_string()));
        if self.n < 2 {
            return bad("N must be at least 2");
        }
        match self.kind {
            EnsembleKind::Elliptic { sigma, tau } => {
                if !(sigma > 0.0) {
                    return bad("sigma must be positive");
                }
                if !(-1.0..=1.0).contains(&tau) {
                    return bad("tau must lie in [-1, 1]");
                }
            }
            EnsembleKind::InducedGinibre { alpha } if !(alpha >= 0.0) => return bad("alpha must be >= 0"),
            EnsembleKind::TruncatedUnitary { kappa } if !(kappa >= 0.0) => return bad("kappa must be >= 0"),
            EnsembleKind::QuantumScattering { m, gamma } => {
                if !(m > 0.0) {
                    return bad("m must be positive");
                }
                if !gamma.is_finite() {
                    return bad("gamma must be finite");
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// True for the rotationally invariant single-ring ensembles.
    pub fn is_biunitary(&self) -> bool {
        matches!(
            self.kind,
            EnsembleKind::Ginibre
                | EnsembleKind::InducedGinibre { .. }
                | EnsembleKind::TruncatedUnitary { .. }
                | EnsembleKind::Spherical
                | EnsembleKind::ProductGinibre
        )
    }
}

pub fn complex_gaussian<R: Rng>(rows: usize, cols: usize, var: f64, rng: &mut R) -> Mat<C64> {
    let s = (0.5 * var).sqrt();
    Mat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(s * re, s * im)
    })
}

/// GUE with <|H_ij|^2> = sigma^2/N, semicircle on [-2 sigma, 2 sigma].
pub fn gue<R: Rng>(n: usize, sigma: f64, rng: &mut R) -> Mat<C64> {
    let a = complex_gaussian(n, n, sigma * sigma / n as f64, rng);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * r)
}

/// Haar unitary: QR of a Ginibre matrix with R's diagonal made positive.
pub fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> Mat<C64> {
    let a = complex_gaussian(n, n, 1.0, rng);
    let qr = a.qr();
    let mut q = qr.compute_Q();
    let r = qr.R();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

fn adjoint(a: &Mat<C64>) -> Mat<C64> {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

fn condition_number(a: &Mat<C64>) -> f64 {
    match a.singular_values() {
        Ok(s) => {
            let (mx, mn) = s.iter().fold((0.0f64, f64::INFINITY), |(a, b), &x| (a.max(x), b.min(x)));
            if mn > 0.0 { mx / mn } else { f64::INFINITY }
        }
        Err(_) => f64::INFINITY,
    }
}

/// Draws one matrix from `spec` using the generator of `stream`.
pub fn sample(spec: &EnsembleSpec, stream: RngStream) -> Result<Sampled, EnsembleError> {
    spec.validate()?;
    let n = spec.n;
    let nf = n as f64;
    let mut rng = stream.rng();
    let rng = &mut rng;
    let plain = |m: Mat<C64>| Ok(Sampled { matrix: m, rejections: 0 });
    match spec.kind {
        EnsembleKind::Ginibre => plain(complex_gaussian(n, n, 1.0 / nf, rng)),
        EnsembleKind::Elliptic { sigma, tau } => {
            let h1 = gue(n, sigma, rng);
            let h2 = gue(n, sigma, rng);
            let a = ((1.0 + tau) / 2.0).sqrt();
            let b = ((1.0 - tau) / 2.0).sqrt();
            plain(Mat::from_fn(n, n, |i, j| h1[(i, j)] * a + C64::new(0.0, b) * h2[(i, j)]))
        }
        EnsembleKind::InducedGinibre { alpha } => {
            let m = n + (alpha * nf).round() as usize;
            let x = complex_gaussian(n, m, 1.0 / nf, rng);
            // Orthonormal basis of the row space of X (complement of ker X).
            let u1 = adjoint(&x).qr().compute_thin_Q();
            let v = haar_unitary(n, rng);
            plain(&(&x * &u1) * &v)
        }
        EnsembleKind::TruncatedUnitary { kappa } => {
            let l = n + (kappa * nf).round() as usize;
            let u = haar_unitary(l, rng);
            plain(Mat::from_fn(n, n, |i, j| u[(i, j)]))
        }
        EnsembleKind::Spherical => {
            let x1 = complex_gaussian(n, n, 1.0 / nf, rng);
            let mut rejections = 0;
            loop {
                let x2 = complex_gaussian(n, n, 1.0 / nf, rng);
                if condition_number(&x2) <= SPHERICAL_COND_LIMIT {
                    let inv = x2.partial_piv_lu().inverse();
                    return Ok(Sampled { matrix: &x1 * &inv, rejections });
                }
                rejections += 1;
                if rejections >= MAX_REJECTIONS {
                    return Err(EnsembleError::TooManyRejections(rejections));
                }
            }
        }
        EnsembleKind::ProductGinibre => {
            let x1 = complex_gaussian(n, n, 1.0 / nf, rng);
            let x2 = complex_gaussian(n, n, 1.0 / nf, rng);
            plain(&x1 * &x2)
        }
        EnsembleKind::PseudoHermitianProduct => {
            let mut a = gue(n, 1.0, rng);
            let mut b = gue(n, 1.0, rng);
            for i in 0..n {
                a[(i, i)] += 2.0;
                b[(i, i)] += 2.0;
            }
            plain(&a * &b)
        }
        EnsembleKind::QuantumScattering { m, gamma } => {
            let h = gue(n, 1.0, rng);
            let channels = ((m * nf).round() as usize).max(1);
            let v = complex_gaussian(n, channels, 1.0 / nf, rng);
            let w = &v * &adjoint(&v);
            let ig = C64::new(0.0, gamma);
            plain(Mat::from_fn(n, n, |i, j| h[(i, j)] + ig * w[(i, j)]))
        }
    }
}

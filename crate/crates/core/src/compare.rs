//! Bin-averaged analytic predictions and their agreement with Monte Carlo
//! tables.

use crate::estimators::{BinEstimate, PointBinning};
use crate::numcore::{gauss_legendre, PairBinning, C64};
use std::f64::consts::TAU;

fn nodes(a: f64, b: f64, gl: &(Vec<f64>, Vec<f64>)) -> impl Iterator<Item = (f64, f64)> + '_ {
    let (h, m) = (0.5 * (b - a), 0.5 * (b + a));
    gl.0.iter().zip(&gl.1).map(move |(x, w)| (m + h * x, h * w))
}

/// Average of f over a single-point bin with an `order`-point Gauss rule per
/// dimension. Radial bins are averaged over the annulus, which for a
/// rotation-invariant f reduces to the radial integral.
pub fn point_bin_average<F, E>(binning: &PointBinning, bin: usize, order: usize, f: F) -> Result<f64, E>
where
    F: Fn(C64) -> Result<f64, E>,
{
    let gl = gauss_legendre(order);
    let mut s = 0.0;
    let mut norm = 0.0;
    match binning {
        PointBinning::Radial { edges } => {
            for (r, w) in nodes(edges[bin], edges[bin + 1], &gl) {
                s += w * r * f(C64::new(r, 0.0))?;
                norm += w * r;
            }
        }
        PointBinning::RealAxis { edges } => {
            for (x, w) in nodes(edges[bin], edges[bin + 1], &gl) {
                s += w * f(C64::new(x, 0.0))?;
                norm += w;
            }
        }
        PointBinning::Grid { x_edges, y_edges } => {
            let ny = y_edges.len() - 1;
            let (i, j) = (bin / ny, bin % ny);
            for (x, wx) in nodes(x_edges[i], x_edges[i + 1], &gl) {
                for (y, wy) in nodes(y_edges[j], y_edges[j + 1], &gl) {
                    s += wx * wy * f(C64::new(x, y))?;
                    norm += wx * wy;
                }
            }
        }
    }
    Ok(s / norm)
}

/// Average of f(z, w) over a pair bin. Radial pair bins put w on the positive
/// real axis and z at angle dphi, so f must be invariant under a common
/// rotation of both arguments.
pub fn pair_bin_average<F, E>(binning: &PairBinning, bin: usize, order: usize, f: F) -> Result<C64, E>
where
    F: Fn(C64, C64) -> Result<C64, E>,
{
    let gl = gauss_legendre(order);
    let mut s = C64::new(0.0, 0.0);
    let mut norm = 0.0;
    match binning {
        PairBinning::Disks { centers, radius } => {
            let (a, b) = centers[bin];
            let gt = gauss_legendre(2 * order);
            let disk: Vec<(C64, f64)> = nodes(0.0, *radius, &gl)
                .flat_map(|(r, wr)| nodes(0.0, TAU, &gt).map(move |(t, wt)| (C64::from_polar(r, t), wr * wt * r)))
                .collect();
            for &(d1, w1) in &disk {
                for &(d2, w2) in &disk {
                    s += w1 * w2 * f(a + d1, b + d2)?;
                    norm += w1 * w2;
                }
            }
        }
        PairBinning::Radial { r_edges, phi_edges } => {
            let nr = r_edges.len() - 1;
            let np = phi_edges.len() - 1;
            let (i, j, k) = (bin / np / nr, (bin / np) % nr, bin % np);
            for (r1, w1) in nodes(r_edges[i], r_edges[i + 1], &gl) {
                for (r2, w2) in nodes(r_edges[j], r_edges[j + 1], &gl) {
                    for (p, wp) in nodes(phi_edges[k], phi_edges[k + 1], &gl) {
                        let w = w1 * w2 * wp * r1 * r2;
                        s += w * f(C64::from_polar(r1, p), C64::new(r2, 0.0))?;
                        norm += w;
                    }
                }
            }
        }
        PairBinning::RealGrid { x_edges, y_edges } => {
            let ny = y_edges.len() - 1;
            let (i, j) = (bin / ny, bin % ny);
            for (x, wx) in nodes(x_edges[i], x_edges[i + 1], &gl) {
                for (y, wy) in nodes(y_edges[j], y_edges[j + 1], &gl) {
                    s += wx * wy * f(C64::new(x, 0.0), C64::new(y, 0.0))?;
                    norm += wx * wy;
                }
            }
        }
    }
    Ok(s / norm)
}

/// One bin of a Monte Carlo versus analytic comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Agreement {
    pub coords: Vec<f64>,
    pub mc: C64,
    pub stderr: f64,
    pub analytic: C64,
    pub count: u64,
}

impl Agreement {
    pub fn new(row: &BinEstimate, analytic: C64) -> Self {
        Self { coords: row.coords.clone(), mc: row.value, stderr: row.stderr, analytic, count: row.count }
    }

    /// |MC - analytic| in units of the MC standard error.
    pub fn z_score(&self) -> f64 {
        (self.mc - self.analytic).norm() / self.stderr
    }

    pub fn relative_error(&self) -> f64 {
        (self.mc - self.analytic).norm() / self.analytic.norm()
    }

    /// Within `rel` relative error or `nsigma` standard errors, whichever
    /// is looser.
    pub fn agrees(&self, rel: f64, nsigma: f64) -> bool {
        let d = (self.mc - self.analytic).norm();
        d <= (rel * self.analytic.norm()).max(nsigma * self.stderr)
    }
}

use crate::common::*;
use crate::predict::{self, Quantity, Route};
use clap::{Args, Subcommand};
use overlap_core::analytic::{o2_elliptic, o2_exact_ginibre, phi_disk_integral, phi_microscopic, phi_plane_integral};
use overlap_core::numcore::C64;
use rayon::prelude::*;
use std::path::PathBuf;

#[derive(Debug, Clone, Subcommand)]
pub enum AnalyticCmd {
    /// Large-N one-point function
    O1(PointGrid),
    /// Large-N two-point function
    O2(PairGrid),
    /// Universal traced resolvent product outside a single-ring support
    H(PairGrid),
    /// Microscopic bulk profile and its integrals
    Phi(PhiArgs),
    /// Exact finite-N two-point function of the Ginibre ensemble
    ExactO2(ExactArgs),
    /// Elliptic two-point function
    EllipticO2(EllipticArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutArg {
    /// Output CSV (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PointGrid {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Point or segment re,im[:re,im:n] (repeatable)
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub z: Vec<Points>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Args)]
pub struct PairGrid {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub z1: Vec<Points>,
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub z2: Vec<Points>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Args)]
pub struct PhiArgs {
    /// |omega| values a:b:n
    #[arg(long)]
    pub w: Option<Range>,
    /// Integral of Phi over the disk of this radius
    #[arg(long)]
    pub disk: Option<f64>,
    /// Integral of Phi over the plane
    #[arg(long)]
    pub plane: bool,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub z1: Vec<Points>,
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub z2: Vec<Points>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Args)]
pub struct EllipticArgs {
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub z1: Vec<Points>,
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub z2: Vec<Points>,
    #[command(flatten)]
    pub out: OutArg,
}

pub const PAIR_HEADER: [&str; 7] = ["z1_re", "z1_im", "z2_re", "z2_im", "value_re", "value_im", "status"];

/// Writes one row per pair; failures at single points are reported in the
/// status column rather than aborting the grid.
pub fn write_pairs(
    command: &str,
    params: serde_json::Value,
    out: &OutArg,
    pts: &[(C64, C64)],
    eval: impl Fn(C64, C64) -> Result<C64, String> + Sync,
) -> CliResult<()> {
    let hash = config_hash(command, &params);
    let vals: Vec<Result<C64, String>> = pts.par_iter().map(|&(a, b)| eval(a, b)).collect();
    let mut w = CsvOut::create(out.out.as_deref(), &hash, &[], &PAIR_HEADER)?;
    for ((a, b), v) in pts.iter().zip(vals) {
        let (v, st) = match v {
            Ok(v) => (v, "ok".to_string()),
            Err(e) => (C64::new(f64::NAN, f64::NAN), e),
        };
        w.row([f(a.re), f(a.im), f(b.re), f(b.im), f(v.re), f(v.im), st])?;
    }
    w.finish()?;
    Ok(())
}

pub fn write_points(
    command: &str,
    params: serde_json::Value,
    out: &OutArg,
    pts: &[C64],
    eval: impl Fn(C64) -> Result<f64, String> + Sync,
) -> CliResult<()> {
    let hash = config_hash(command, &params);
    let vals: Vec<Result<f64, String>> = pts.par_iter().map(|&z| eval(z)).collect();
    let mut w = CsvOut::create(out.out.as_deref(), &hash, &[], &["z_re", "z_im", "value", "status"])?;
    for (z, v) in pts.iter().zip(vals) {
        let (v, st) = match v {
            Ok(v) => (v, "ok".to_string()),
            Err(e) => (f64::NAN, e),
        };
        w.row([f(z.re), f(z.im), f(v), st])?;
    }
    w.finish()?;
    Ok(())
}

fn pj<T: serde::Serialize>(v: &T) -> CliResult<serde_json::Value> {
    serde_json::to_value(v).map_err(err)
}

pub fn run(cmd: &AnalyticCmd) -> CliResult<()> {
    match cmd {
        AnalyticCmd::O1(a) => {
            let p = predict::point(Quantity::O1, a.model.kind(), Route::Analytic)?;
            let params = serde_json::json!({ "model": pj(&a.model)?, "z": pj(&a.z)? });
            write_points("analytic o1", params, &a.out, &flatten(&a.z), p)
        }
        AnalyticCmd::O2(a) | AnalyticCmd::H(a) => {
            let (q, name) = match cmd {
                AnalyticCmd::O2(_) => (Quantity::O2, "analytic o2"),
                _ => (Quantity::Hprod, "analytic h"),
            };
            let p = predict::pair(q, a.model.kind(), Route::Analytic)?;
            let pts = pair_up(&flatten(&a.z1), &flatten(&a.z2))?;
            let params = serde_json::json!({ "model": pj(&a.model)?, "z1": pj(&a.z1)?, "z2": pj(&a.z2)? });
            write_pairs(name, params, &a.out, &pts, p)
        }
        AnalyticCmd::Phi(a) => {
            let params = serde_json::json!({ "w": pj(&a.w)?, "disk": a.disk, "plane": a.plane });
            let hash = config_hash("analytic phi", &params);
            let mut w = CsvOut::create(a.out.out.as_deref(), &hash, &[], &["quantity", "argument", "value"])?;
            if let Some(r) = &a.w {
                for &x in &r.0 {
                    w.row(["phi".to_string(), f(x), f(phi_microscopic(x))])?;
                }
            }
            if let Some(r) = a.disk {
                w.row(["disk_integral".to_string(), f(r), f(phi_disk_integral(r).map_err(err)?)])?;
            }
            if a.plane {
                w.row(["plane_integral".to_string(), "inf".to_string(), f(phi_plane_integral().map_err(err)?)])?;
            }
            if a.w.is_none() && a.disk.is_none() && !a.plane {
                return Err(err("give --w, --disk or --plane"));
            }
            w.finish()?;
            Ok(())
        }
        AnalyticCmd::ExactO2(a) => {
            let pts = pair_up(&flatten(&a.z1), &flatten(&a.z2))?;
            let params = serde_json::json!({ "n": a.n, "z1": pj(&a.z1)?, "z2": pj(&a.z2)? });
            let n = a.n;
            write_pairs("analytic exact-o2", params, &a.out, &pts, move |z1, z2| {
                o2_exact_ginibre(n, z1, z2).map_err(|e| e.to_string())
            })
        }
        AnalyticCmd::EllipticO2(a) => {
            if !(a.sigma > 0.0) || !(a.tau.abs() < 1.0) {
                return Err(err("need sigma > 0 and |tau| < 1"));
            }
            let pts = pair_up(&flatten(&a.z1), &flatten(&a.z2))?;
            let params = serde_json::json!({ "sigma": a.sigma, "tau": a.tau, "z1": pj(&a.z1)?, "z2": pj(&a.z2)? });
            let (s, t) = (a.sigma, a.tau);
            write_pairs("analytic elliptic-o2", params, &a.out, &pts, move |z1, z2| {
                o2_elliptic(s, t, z1, z2).map_err(|e| e.to_string())
            })
        }
    }
}

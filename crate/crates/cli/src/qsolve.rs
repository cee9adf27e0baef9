use crate::analytic::{write_pairs, write_points, OutArg, PairGrid, PointGrid};
use crate::common::*;
use crate::predict::{self, Quantity, Route};
use clap::{Args, Subcommand};
use overlap_core::qsolver::{k_component, solve_green, wheel_coefficient, Branch};
use rayon::prelude::*;

#[derive(Debug, Clone, Subcommand)]
pub enum QsolveCmd {
    /// Quaternionic Green's function
    Green(PointGrid),
    /// One-point function from the Green's function
    O1(PointGrid),
    /// Component K^{11}_{1bar 1bar} of the ladder sum
    K(PairGrid),
    /// Two-point function (ladder derivative, or boundary values on a real spectrum)
    O2(PairGrid),
    /// Traced resolvent product outside the spectrum
    H(PairGrid),
    /// Coefficients of the wheel generating function
    Wheel(WheelArgs),
}

#[derive(Debug, Clone, Args)]
pub struct WheelArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Maximum power of z1^-1
    #[arg(long, default_value_t = 2)]
    pub kmax: usize,
    /// Maximum power of conj(z2)^-1
    #[arg(long, default_value_t = 2)]
    pub lmax: usize,
    /// Contour radius, beyond the spectrum
    #[arg(long, default_value_t = 3.0)]
    pub radius: f64,
    /// Trapezoid nodes per circle
    #[arg(long, default_value_t = 32)]
    pub npts: usize,
    #[command(flatten)]
    pub out: OutArg,
}

fn pj<T: serde::Serialize>(v: &T) -> CliResult<serde_json::Value> {
    serde_json::to_value(v).map_err(err)
}

pub fn run(cmd: &QsolveCmd) -> CliResult<()> {
    match cmd {
        QsolveCmd::Green(a) => {
            let rt = a.model.rtransform();
            let pts = flatten(&a.z);
            let params = serde_json::json!({ "model": pj(&a.model)?, "z": pj(&a.z)? });
            let hash = config_hash("qsolve green", &params);
            let sols: Vec<_> = pts.par_iter().map(|&z| solve_green(&rt, z)).collect();
            let header =
                ["z_re", "z_im", "g11_re", "g11_im", "g1b_re", "g1b_im", "gb1_re", "gb1_im", "gbb_re", "gbb_im", "branch", "near_edge", "status"];
            let mut w = CsvOut::create(a.out.out.as_deref(), &hash, &[], &header)?;
            for (z, s) in pts.iter().zip(sols) {
                let mut row = vec![f(z.re), f(z.im)];
                match s {
                    Ok(s) => {
                        for v in [s.g.q11, s.g.q1b, s.g.qb1, s.g.qbb] {
                            row.extend([f(v.re), f(v.im)]);
                        }
                        let br = if s.branch == Branch::Holomorphic { "holomorphic" } else { "nonholomorphic" };
                        row.extend([br.to_string(), s.near_edge.to_string(), "ok".to_string()]);
                    }
                    Err(e) => {
                        row.extend(std::iter::repeat_n(f(f64::NAN), 8));
                        row.extend([String::new(), String::new(), e.to_string()]);
                    }
                }
                w.row(row)?;
            }
            w.finish()?;
            Ok(())
        }
        QsolveCmd::O1(a) => {
            let p = predict::point(Quantity::O1, a.model.kind(), Route::Qsolver)?;
            let params = serde_json::json!({ "model": pj(&a.model)?, "z": pj(&a.z)? });
            write_points("qsolve o1", params, &a.out, &flatten(&a.z), p)
        }
        QsolveCmd::K(a) => {
            let rt = a.model.rtransform();
            let pts = pair_up(&flatten(&a.z1), &flatten(&a.z2))?;
            let params = serde_json::json!({ "model": pj(&a.model)?, "z1": pj(&a.z1)?, "z2": pj(&a.z2)? });
            write_pairs("qsolve k", params, &a.out, &pts, move |z1, z2| k_component(&rt, z1, z2).map_err(|e| e.to_string()))
        }
        QsolveCmd::O2(a) | QsolveCmd::H(a) => {
            let (q, name) = match cmd {
                QsolveCmd::O2(_) => (Quantity::O2, "qsolve o2"),
                _ => (Quantity::Hprod, "qsolve h"),
            };
            let p = predict::pair(q, a.model.kind(), Route::Qsolver)?;
            let pts = pair_up(&flatten(&a.z1), &flatten(&a.z2))?;
            let params = serde_json::json!({ "model": pj(&a.model)?, "z1": pj(&a.z1)?, "z2": pj(&a.z2)? });
            write_pairs(name, params, &a.out, &pts, p)
        }
        QsolveCmd::Wheel(a) => {
            let rt = a.model.rtransform();
            let params = serde_json::json!({
                "model": pj(&a.model)?, "kmax": a.kmax, "lmax": a.lmax, "radius": a.radius, "npts": a.npts,
            });
            let hash = config_hash("qsolve wheel", &params);
            let kl: Vec<(usize, usize)> = (1..=a.kmax).flat_map(|k| (1..=a.lmax).map(move |l| (k, l))).collect();
            let vals: Vec<_> = kl.par_iter().map(|&(k, l)| wheel_coefficient(&rt, k, l, a.radius, a.npts)).collect();
            let header = ["k", "l", "c_re", "c_im", "n2cov_re", "n2cov_im"];
            let mut w = CsvOut::create(a.out.out.as_deref(), &hash, &[], &header)?;
            for ((k, l), v) in kl.iter().zip(vals) {
                let c = v.map_err(err)?;
                let cov = c * (k * l) as f64;
                w.row([k.to_string(), l.to_string(), f(c.re), f(c.im), f(cov.re), f(cov.im)])?;
            }
            w.finish()?;
            Ok(())
        }
    }
}

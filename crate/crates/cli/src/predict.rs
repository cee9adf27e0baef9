use crate::common::*;
use clap::ValueEnum;
use overlap_core::analytic::{h_universal, o1_biunitary, o1_elliptic, o2_biunitary, o2_elliptic, elliptic_inside};
use overlap_core::ensembles::EnsembleKind;
use overlap_core::numcore::C64;
use overlap_core::qsolver::{h_holomorphic, o1_from_green, o2_from_k, o2_real_spectrum, pt_density, solve_green, RTransformSpec};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Finite-difference step of the ladder route to O2.
pub const O2_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// Closed-form expressions
    Analytic,
    /// Quaternionic Green's function and ladder resummation
    Qsolver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Rho,
    O1,
    O2,
    Hprod,
    Tracecov,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Rho => "rho",
            Quantity::O1 => "o1",
            Quantity::O2 => "o2",
            Quantity::Hprod => "hprod",
            Quantity::Tracecov => "tracecov",
        }
    }
}

/// Models whose one- and two-point functions depend only on |z| and
/// arg z - arg w, as radial binning assumes.
pub fn rotation_invariant(kind: EnsembleKind) -> bool {
    match kind {
        EnsembleKind::Elliptic { tau, .. } => tau == 0.0,
        EnsembleKind::PseudoHermitianProduct | EnsembleKind::QuantumScattering { .. } => false,
        _ => true,
    }
}

pub type PointFn = Box<dyn Fn(C64) -> Result<f64, String> + Sync>;
pub type PairFn = Box<dyn Fn(C64, C64) -> Result<C64, String> + Sync>;

fn unsupported(q: Quantity, kind: EnsembleKind, route: Route) -> CliError {
    err(format!("no {route:?} prediction of {} for {kind:?}", q.name()).to_lowercase())
}

pub fn point(q: Quantity, kind: EnsembleKind, route: Route) -> CliResult<PointFn> {
    let rt = rtransform_of(kind);
    let radial = radial_of(kind);
    let pt = matches!(kind, EnsembleKind::PseudoHermitianProduct);
    match (q, route) {
        (Quantity::Rho, _) if pt => Ok(Box::new(|z: C64| pt_density(z.re).map_err(|e| e.to_string()))),
        (Quantity::Rho, Route::Analytic) => {
            if let Some(f) = radial {
                return Ok(Box::new(move |z: C64| {
                    let r = z.norm();
                    Ok(if r > 0.0 { f.df(r) / (2.0 * PI * r) } else { 0.0 })
                }));
            }
            if let EnsembleKind::Elliptic { sigma, tau } = kind {
                return Ok(Box::new(move |z: C64| {
                    Ok(if elliptic_inside(sigma, tau, z) { 1.0 / (PI * sigma * sigma * (1.0 - tau * tau)) } else { 0.0 })
                }));
            }
            Err(unsupported(q, kind, route))
        }
        (Quantity::O1, Route::Analytic) => {
            if let Some(f) = radial {
                return Ok(Box::new(move |z: C64| Ok(o1_biunitary(&f, z.norm()))));
            }
            if let EnsembleKind::Elliptic { sigma, tau } = kind {
                return Ok(Box::new(move |z: C64| Ok(o1_elliptic(sigma, tau, z))));
            }
            Err(unsupported(q, kind, route))
        }
        (Quantity::O1, Route::Qsolver) if !pt => {
            Ok(Box::new(move |z: C64| solve_green(&rt, z).map(|s| o1_from_green(&s)).map_err(|e| e.to_string())))
        }
        _ => Err(unsupported(q, kind, route)),
    }
}

pub fn pair(q: Quantity, kind: EnsembleKind, route: Route) -> CliResult<PairFn> {
    let rt = rtransform_of(kind);
    let radial = radial_of(kind);
    let s = |e: &dyn std::fmt::Display| e.to_string();
    match (q, route) {
        (Quantity::O2, _) if matches!(rt, RTransformSpec::PseudoHermitianProduct) => {
            Ok(Box::new(move |z: C64, w: C64| o2_real_spectrum(&rt, z.re, w.re).map(|v| C64::new(v, 0.0)).map_err(|e| s(&e))))
        }
        (Quantity::O2, Route::Analytic) => {
            if let Some(f) = radial {
                return Ok(Box::new(move |z, w| o2_biunitary(&f, z, w).map_err(|e| s(&e))));
            }
            if let EnsembleKind::Elliptic { sigma, tau } = kind {
                return Ok(Box::new(move |z, w| o2_elliptic(sigma, tau, z, w).map_err(|e| s(&e))));
            }
            Err(unsupported(q, kind, route))
        }
        (Quantity::O2, Route::Qsolver) => Ok(Box::new(move |z, w| o2_from_k(&rt, z, w, O2_STEP).map_err(|e| s(&e)))),
        (Quantity::Hprod, Route::Analytic) => match radial {
            Some(f) if f.r_out.is_finite() => Ok(Box::new(move |z, w| h_universal(z, w, f.r_out).map_err(|e| s(&e)))),
            _ => Err(unsupported(q, kind, route)),
        },
        (Quantity::Hprod, Route::Qsolver) => Ok(Box::new(move |z, w| h_holomorphic(&rt, z, w).map_err(|e| s(&e)))),
        _ => Err(unsupported(q, kind, route)),
    }
}

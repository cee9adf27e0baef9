//! Quaternionic Green's functions, the ladder rung B, the Bethe-Salpeter
//! resummation and the holomorphic two-point functions built on them.

use crate::analytic::{elliptic_inside, RadialCdfSpec};
use crate::numcore::{
    kron, mat4_identity, mat4_mul, mat4_solve, mat4_spectral_radius, mat4_sub, wirtinger_mixed_richardson, Mat4,
    NumError, Quaternion22, C64, I,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QError {
    #[error("Green's function iteration did not converge at z = {0}")]
    NoConvergence(C64),
    #[error("not available for this model: {0}")]
    Unsupported(&'static str),
    #[error("singular rung: {0}")]
    SingularRung(&'static str),
    #[error("pole of the ladder sum")]
    Pole,
    #[error("argument {0} too close to the exceptional point")]
    ExceptionalPoint(f64),
    #[error("coincident arguments")]
    Coincident,
    #[error("result not real: imaginary residue {0:e}")]
    NonReal(f64),
    #[error("logarithm branch jump")]
    Branch,
    #[error(transparent)]
    Num(#[from] NumError),
}

/// The models for which the quaternionic R-transform is available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum RTransformSpec {
    Elliptic { sigma: f64, tau: f64 },
    Biunitary(RadialCdfSpec),
    PseudoHermitianProduct,
    QuantumScattering { m: f64, gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Holomorphic,
    Nonholomorphic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenSolution {
    pub g: Quaternion22,
    pub branch: Branch,
    /// z lies within tolerance of the spectral edge, where the branch
    /// choice is ambiguous.
    pub near_edge: bool,
}

/// Right end of the pseudohermitian spectrum, (11 + 5 sqrt 5)/2.
pub fn pt_right_edge() -> f64 {
    0.5 * (11.0 + 5.0 * 5f64.sqrt())
}

const EDGE_TOL: f64 = 1e-9;

/// A radius enclosing the spectrum, when it is bounded.
pub fn spectrum_bound(rt: &RTransformSpec) -> Option<f64> {
    match *rt {
        RTransformSpec::Elliptic { sigma, tau } => Some(sigma * (1.0 + tau.abs())),
        RTransformSpec::Biunitary(f) => f.r_out.is_finite().then_some(f.r_out),
        RTransformSpec::PseudoHermitianProduct => Some(pt_right_edge()),
        RTransformSpec::QuantumScattering { m, gamma } => Some(2.0 + gamma.abs() * (1.0 + m.sqrt()).powi(2)),
    }
}

impl RTransformSpec {
    /// R(Q) for the models with a closed-form quaternionic R-transform.
    pub fn eval(&self, q: Quaternion22) -> Result<Quaternion22, QError> {
        match *self {
            RTransformSpec::Elliptic { sigma, tau } => {
                let s2 = sigma * sigma;
                Ok(Quaternion22::new(q.q11 * s2 * tau, q.q1b * s2, q.qb1 * s2, q.qbb * s2 * tau))
            }
            RTransformSpec::QuantumScattering { m, gamma } => {
                let g = qs_coupling(gamma);
                let inv = Quaternion22::identity().sub(q.mul(g)).inverse()?;
                Ok(q.add(g.mul(inv).scale(C64::new(m, 0.0))))
            }
            _ => Err(QError::Unsupported("closed-form quaternionic R-transform")),
        }
    }

    /// Jacobian of R at Q, in the row-major vectorization q11, q1b, qb1, qbb.
    fn jacobian(&self, q: Quaternion22) -> Result<Mat4, QError> {
        match *self {
            RTransformSpec::Elliptic { sigma, tau } => {
                let s2 = sigma * sigma;
                let d = [s2 * tau, s2, s2, s2 * tau].map(|v| C64::new(v, 0.0));
                Ok(crate::numcore::mat4_diag(d))
            }
            RTransformSpec::QuantumScattering { m, gamma } => {
                // dR = dQ + m g (1 - Q g)^-1 dQ g (1 - Q g)^-1
                let g = qs_coupling(gamma);
                let inv = Quaternion22::identity().sub(q.mul(g)).inverse()?;
                let left = g.mul(inv).scale(C64::new(m, 0.0));
                let right = g.mul(inv);
                let mut j = kron(left, right.transpose());
                for (k, row) in j.iter_mut().enumerate() {
                    row[k] += 1.0;
                }
                Ok(j)
            }
            _ => Err(QError::Unsupported("closed-form quaternionic R-transform")),
        }
    }
}

fn qs_coupling(gamma: f64) -> Quaternion22 {
    Quaternion22::diag(C64::new(0.0, gamma), C64::new(0.0, -gamma))
}

fn quaternion_of(z: C64, w: f64) -> Quaternion22 {
    // w enters with a negative sign so that the off-diagonal of the
    // continued solution is +i s with s > 0, matching the closed forms.
    Quaternion22::from_point(z, C64::new(-w, 0.0))
}

/// Elliptic holomorphic resolvent 2/(z + sqrt(z^2 - 4 sigma^2 tau)) on the
/// branch decaying as 1/z.
pub fn elliptic_holomorphic(sigma: f64, tau: f64, z: C64) -> C64 {
    let r = (z * z - 4.0 * sigma * sigma * tau).sqrt();
    let (p, m) = (z + r, z - r);
    2.0 / if p.norm() >= m.norm() { p } else { m }
}

fn diag_green(g: C64) -> Quaternion22 {
    Quaternion22::diag(g, g.conj())
}

/// Solve G^-1 + R(G) = Q at w -> 0 and report the regime.
pub fn solve_green(rt: &RTransformSpec, z: C64) -> Result<GreenSolution, QError> {
    if !z.is_finite() {
        return Err(QError::Num(NumError::NonFinite));
    }
    match *rt {
        RTransformSpec::Elliptic { sigma, tau } => {
            let s2 = sigma * sigma;
            let t2 = 1.0 - tau * tau;
            let metric = if t2 > 0.0 { (z.re / (1.0 + tau)).powi(2) + (z.im / (1.0 - tau)).powi(2) } else { f64::INFINITY };
            let near_edge = (metric / s2 - 1.0).abs() < EDGE_TOL;
            if t2 > 0.0 && elliptic_inside(sigma, tau, z) {
                let g11 = (z.conj() - z * tau) / (s2 * t2);
                let w = z - z.conj() * tau;
                let s = (1.0 - w.norm_sqr() / (s2 * t2 * t2)).max(0.0).sqrt() / sigma;
                let g = Quaternion22::new(g11, I * s, I * s, g11.conj());
                Ok(GreenSolution { g, branch: Branch::Nonholomorphic, near_edge })
            } else {
                let g = elliptic_holomorphic(sigma, tau, z);
                Ok(GreenSolution { g: diag_green(g), branch: Branch::Holomorphic, near_edge })
            }
        }
        RTransformSpec::Biunitary(f) => {
            let r = z.norm();
            let near_edge = (r - f.r_out).abs() < EDGE_TOL || (f.r_in > 0.0 && (r - f.r_in).abs() < EDGE_TOL);
            if r >= f.r_out {
                return Ok(GreenSolution { g: diag_green(1.0 / z), branch: Branch::Holomorphic, near_edge });
            }
            if r <= f.r_in && f.r_in > 0.0 {
                return Ok(GreenSolution { g: Quaternion22::zero(), branch: Branch::Holomorphic, near_edge });
            }
            let (f_over_r2, fr) = if r > 0.0 {
                let fr = f.f(r);
                (fr / (r * r), fr)
            } else {
                let l = f.f_over_r2_at_zero();
                if !l.is_finite() {
                    return Err(QError::Num(NumError::NonFinite));
                }
                (l, 0.0)
            };
            let g11 = z.conj() * f_over_r2;
            let s = (f_over_r2 * (1.0 - fr)).max(0.0).sqrt();
            let g = Quaternion22::new(g11, I * s, I * s, g11.conj());
            Ok(GreenSolution { g, branch: Branch::Nonholomorphic, near_edge })
        }
        RTransformSpec::PseudoHermitianProduct => {
            let g = pt_green(z)?;
            let x = z.re;
            let near_edge = z.im.abs() < EDGE_TOL && (x.abs() < EDGE_TOL || (x - pt_right_edge()).abs() < EDGE_TOL);
            Ok(GreenSolution { g: diag_green(g), branch: Branch::Holomorphic, near_edge })
        }
        RTransformSpec::QuantumScattering { .. } => solve_green_newton(rt, z),
    }
}

/// Newton iteration on G^-1 + R(G) - Q(z, w) = 0, continued from large w
/// down to w = 0. Works for any model with `RTransformSpec::eval`.
pub fn solve_green_newton(rt: &RTransformSpec, z: C64) -> Result<GreenSolution, QError> {
    let mut ws: Vec<f64> = (0..=60).map(|k| 10.0 * 10f64.powf(-12.0 * k as f64 / 60.0)).collect();
    ws.push(0.0);
    let mut g = quaternion_of(z, ws[0]).inverse()?;
    for &w in &ws {
        let q = quaternion_of(z, w);
        g = newton_green(rt, q, g).ok_or(QError::NoConvergence(z))?;
    }
    let off = (g.q1b * g.qb1).norm();
    let branch = if off < 1e-14 * (1.0 + g.norm_sqr()) { Branch::Holomorphic } else { Branch::Nonholomorphic };
    let near_edge = off > 0.0 && off < 1e-6;
    if branch == Branch::Holomorphic {
        g = Quaternion22::diag(g.q11, g.qbb);
    }
    Ok(GreenSolution { g, branch, near_edge })
}

fn newton_green(rt: &RTransformSpec, q: Quaternion22, mut g: Quaternion22) -> Option<Quaternion22> {
    for _ in 0..100 {
        let inv = g.inverse().ok()?;
        let res = inv.add(rt.eval(g).ok()?).sub(q);
        if res.norm_sqr() <= 1e-28 * (1.0 + q.norm_sqr()) {
            return Some(g);
        }
        // d(G^-1) = -G^-1 dG G^-1
        let mut j = kron(inv, inv.transpose());
        for row in j.iter_mut() {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        let jr = rt.jacobian(g).ok()?;
        for a in 0..4 {
            for b in 0..4 {
                j[a][b] += jr[a][b];
            }
        }
        let r = res.to_array();
        let mut rhs = crate::numcore::mat4_zero();
        for k in 0..4 {
            rhs[k][0] = r[k / 2][k % 2];
        }
        let step = mat4_solve(&j, &rhs).ok()?;
        let d = Quaternion22::new(step[0][0], step[1][0], step[2][0], step[3][0]);
        g = g.sub(d);
    }
    None
}

fn pt_poly(z: C64, g: C64) -> (C64, C64) {
    let p = ((z * g - (2.0 * z + 1.0)) * g + (z - 2.0)) * g - 1.0;
    let dp = (3.0 * z * g - 2.0 * (2.0 * z + 1.0)) * g + (z - 2.0);
    (p, dp)
}

fn pt_newton(z: C64, mut g: C64) -> Option<C64> {
    for _ in 0..100 {
        let (p, dp) = pt_poly(z, g);
        let d = p / dp;
        if !d.is_finite() {
            return None;
        }
        g -= d;
        if d.norm() <= 1e-15 * (1.0 + g.norm()) {
            return Some(g);
        }
    }
    // near the double root at z = 0 the iteration stalls at roundoff level
    let (p, _) = pt_poly(z, g);
    (p.norm() <= 1e-12 * (1.0 + z.norm())).then_some(g)
}

/// Resolvent of X = (2 + G1)(2 + G2): the root of
/// z g^3 - (2z + 1) g^2 + (z - 2) g - 1 = 0 that decays as 1/z, tracked
/// along a vertical path from Re z + 20i (or -20i below the axis).
pub fn pt_green(z: C64) -> Result<C64, QError> {
    let sign = if z.im < 0.0 { -1.0 } else { 1.0 };
    let target = if z.im == 0.0 { 1e-14 } else { z.im.abs() };
    let start = 20f64.max(2.0 * target);
    let mut g = 1.0 / C64::new(z.re, sign * start);
    let steps = 80;
    for k in 0..=steps {
        let im = start * (target / start).powf(k as f64 / steps as f64);
        g = pt_newton(C64::new(z.re, sign * im), g).ok_or(QError::NoConvergence(z))?;
    }
    if z.im == 0.0 {
        let outside = z.re < 0.0 || z.re > pt_right_edge();
        if outside {
            g = pt_newton(z, C64::new(g.re, 0.0)).ok_or(QError::NoConvergence(z))?;
            g.im = 0.0;
        }
    }
    Ok(g)
}

/// Spectral density of the pseudohermitian product, -Im g(x + i0)/pi.
pub fn pt_density(x: f64) -> Result<f64, QError> {
    Ok((-pt_green(C64::new(x, 0.0))?.im / PI).max(0.0))
}

/// O1 = -G_{1 1bar} G_{1bar 1}/pi; exactly 0 on the holomorphic branch.
pub fn o1_from_green(sol: &GreenSolution) -> f64 {
    match sol.branch {
        Branch::Holomorphic => 0.0,
        Branch::Nonholomorphic => (-(sol.g.q1b * sol.g.qb1) / PI).re,
    }
}

#[derive(Debug, Clone, Copy)]
struct RadialPoint {
    x: f64,
    f: f64,
    a: f64,
    r: f64,
    hole: bool,
}

fn radial_point(cdf: &RadialCdfSpec, g: Quaternion22) -> RadialPoint {
    let x = (g.q1b * g.qb1).re;
    if x.abs() < 1e-300 {
        if g.q11.norm() == 0.0 {
            return RadialPoint { x: 0.0, f: 0.0, a: f64::NAN, r: 0.0, hole: true };
        }
        let r = 1.0 / g.q11.norm();
        return RadialPoint { x: 0.0, f: 1.0, a: cdf.r_out * cdf.r_out, r, hole: false };
    }
    let a = 1.0 / g.det().re;
    let f = 1.0 + x * a;
    RadialPoint { x, f, a, r: (a * f).max(0.0).sqrt(), hole: false }
}

/// S and T for two interior points at equal x, from derivatives along r.
fn st_parametric(cdf: &RadialCdfSpec, r: f64) -> (f64, f64) {
    let f = cdf.f(r);
    let fp = cdf.df(r);
    let r2 = r * r;
    let dx = ((2.0 * f - 1.0) * fp * r2 - 2.0 * r * f * (f - 1.0)) / (r2 * r2);
    let da = 2.0 * r / f - r2 * fp / (f * f);
    (fp / dx, da / dx)
}

/// Closed-form rung B for the supported models. Index (alpha, mu) maps to
/// 2 alpha + mu with 1 -> 0 and 1bar -> 1.
pub fn build_rung(rt: &RTransformSpec, gq: Quaternion22, gp: Quaternion22) -> Result<Mat4, QError> {
    let z = C64::new(0.0, 0.0);
    match *rt {
        RTransformSpec::Elliptic { sigma, tau } => {
            let s2 = sigma * sigma;
            Ok(crate::numcore::mat4_diag([s2 * tau, s2, s2, s2 * tau].map(|v| C64::new(v, 0.0))))
        }
        RTransformSpec::Biunitary(cdf) => {
            let p1 = radial_point(&cdf, gq);
            let p2 = radial_point(&cdf, gp);
            let (s, t) = if p1.hole || p2.hole {
                let s = if p1.hole && p2.hole || p1.x == p2.x { 0.0 } else { (p1.f - p2.f) / (p1.x - p2.x) };
                (s, 0.0)
            } else if p1.x == 0.0 && p2.x == 0.0 {
                (cdf.r_out * cdf.r_out, 0.0)
            } else if (p1.x - p2.x).abs() <= 1e-7 * (p1.x.abs() + p2.x.abs()) {
                if (p1.r - p2.r).abs() > 1e-6 * (p1.r + p2.r) {
                    return Err(QError::SingularRung("equal x at distinct radii"));
                }
                st_parametric(&cdf, 0.5 * (p1.r + p2.r))
            } else {
                let dx = p1.x - p2.x;
                ((p1.f - p2.f) / dx, (p1.a - p2.a) / dx)
            };
            let mut b = [[z; 4]; 4];
            b[1][1] = C64::new(s, 0.0);
            b[2][2] = C64::new(s, 0.0);
            b[1][2] = gq.q1b * gp.q1b * t;
            b[2][1] = gq.qb1 * gp.qb1 * t;
            Ok(b)
        }
        RTransformSpec::PseudoHermitianProduct => {
            Err(QError::Unsupported("only the mixed holomorphic rung component is known; use h_holomorphic"))
        }
        RTransformSpec::QuantumScattering { m, gamma } => {
            let ginv = qs_coupling(gamma).inverse()?;
            let a = ginv.sub(gq).inverse().map_err(|_| QError::SingularRung("g^-1 - G(Q)"))?;
            let c = ginv.sub(gp.transpose()).inverse().map_err(|_| QError::SingularRung("g^-1 - G^T(P)"))?;
            let mut b = kron(a, c);
            for (k, row) in b.iter_mut().enumerate() {
                for v in row.iter_mut() {
                    *v *= m;
                }
                row[k] += 1.0;
            }
            Ok(b)
        }
    }
}

/// Direct summation of the cumulant series for B in the quantum scattering
/// model, truncated at total cumulant order `order`. The cumulants are
/// c^(n)_{s1..sn} = delta_{n2} + m g_{s1} ... g_{sn}.
pub fn build_rung_series_qs(m: f64, gamma: f64, gq: Quaternion22, gp: Quaternion22, order: usize) -> Mat4 {
    let g = qs_coupling(gamma);
    let mut b = mat4_identity();
    // upper[k] = (g G(Q))^(k-1) g with entries [sigma_1][sigma_k];
    // lower[l] = (g G(P))^(l-1) g with entries [rho_1][rho_l].
    let chain = |gg: Quaternion22, len: usize| {
        let mut out = Vec::with_capacity(len);
        let mut cur = g;
        for _ in 0..len {
            out.push(cur);
            cur = g.mul(gg).mul(cur);
        }
        out
    };
    let upper = chain(gq, order);
    let lower = chain(gp, order);
    for k in 1..order {
        for l in 1..=(order - k) {
            let u = upper[k - 1].to_array();
            let d = lower[l - 1].to_array();
            for (al, be, mu, nu) in (0..16).map(|i| (i >> 3 & 1, i >> 2 & 1, i >> 1 & 1, i & 1)) {
                b[2 * al + mu][2 * be + nu] += m * u[al][be] * d[nu][mu];
            }
        }
    }
    b
}

#[derive(Debug, Clone, Copy)]
pub struct BetheSalpeter {
    pub k: Mat4,
    /// Spectral radius of (G(Q) x G^T(P)) B; the ladder series converges
    /// when it is below one.
    pub spectral_radius: f64,
    pub resummable: bool,
}

/// K = (I - (GQ x GP^T) B)^-1 (GQ x GP^T).
pub fn solve_bethe_salpeter(gq: Quaternion22, gp: Quaternion22, b: &Mat4) -> Result<BetheSalpeter, QError> {
    let m = kron(gq, gp.transpose());
    let mb = mat4_mul(&m, b);
    let rho = mat4_spectral_radius(&mb);
    let a = mat4_sub(&mat4_identity(), &mb);
    let k = mat4_solve(&a, &m).map_err(|_| QError::Pole)?;
    if !k.iter().flatten().all(|v| v.is_finite()) {
        return Err(QError::Pole);
    }
    Ok(BetheSalpeter { k, spectral_radius: rho, resummable: rho < 1.0 + 1e-9 })
}

/// K^{11}_{1bar 1bar}(z1, z2) through the full pipeline.
pub fn k_component(rt: &RTransformSpec, z1: C64, z2: C64) -> Result<C64, QError> {
    let gq = solve_green(rt, z1)?.g;
    let gp = solve_green(rt, z2)?.g;
    let b = build_rung(rt, gq, gp)?;
    Ok(solve_bethe_salpeter(gq, gp, &b)?.k[1][1])
}

/// O2 = (1/pi^2) d_{conj z1} d_{z2} K^{11}_{1bar 1bar}.
pub fn o2_from_k(rt: &RTransformSpec, z1: C64, z2: C64, h: f64) -> Result<C64, QError> {
    if (z1 - z2).norm() < 1e-10 {
        return Err(QError::Coincident);
    }
    let d = wirtinger_mixed_richardson(|a, b| k_component(rt, a, b), z1, z2, h)?;
    Ok(d / (PI * PI))
}

/// B^{11}_{1bar 1bar} between holomorphic points with a = g(z1) and
/// d = conj(g(z2)).
pub fn mixed_rung_component(rt: &RTransformSpec, a: C64, d: C64) -> Result<C64, QError> {
    match *rt {
        RTransformSpec::Elliptic { sigma, .. } => Ok(C64::new(sigma * sigma, 0.0)),
        RTransformSpec::Biunitary(cdf) => {
            if !cdf.r_out.is_finite() {
                return Err(QError::Unsupported("unbounded spectrum has no holomorphic exterior"));
            }
            Ok(C64::new(cdf.r_out * cdf.r_out, 0.0))
        }
        RTransformSpec::PseudoHermitianProduct => {
            let num = -3.0 + a + d + a * d;
            Ok(num * num / ((1.0 - a) * (1.0 - d)).powi(2))
        }
        RTransformSpec::QuantumScattering { m, gamma } => {
            let ig = C64::new(0.0, gamma);
            Ok(1.0 + m / ((1.0 / ig - a) * (-1.0 / ig - d)))
        }
    }
}

/// Traced resolvent product h(z1, conj z2) = g gbar/(1 - g gbar B^{11}_{1bar 1bar}).
pub fn h_holomorphic(rt: &RTransformSpec, z1: C64, z2: C64) -> Result<C64, QError> {
    let s1 = solve_green(rt, z1)?;
    let s2 = solve_green(rt, z2)?;
    if s1.branch != Branch::Holomorphic || s2.branch != Branch::Holomorphic {
        return Err(QError::Unsupported("h requires both arguments outside the spectrum"));
    }
    let a = s1.g.q11;
    let d = s2.g.qbb;
    let b = mixed_rung_component(rt, a, d)?;
    let den = 1.0 - a * d * b;
    if den.norm() < 1e-14 {
        return Err(QError::Pole);
    }
    Ok(a * d / den)
}

pub const PLEMELJ_EPS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

// The sign s2 refers to the second argument of h, which is conj z2.
fn plemelj_combination(rt: &RTransformSpec, x: f64, y: f64, eps: f64) -> Result<C64, QError> {
    let mut s = C64::new(0.0, 0.0);
    for s1 in [1.0, -1.0] {
        for s2 in [1.0, -1.0] {
            s += s1 * s2 * h_holomorphic(rt, C64::new(x, s1 * eps), C64::new(y, -s2 * eps))?;
        }
    }
    Ok(-s / (4.0 * PI * PI))
}

/// O2 on a real spectrum from boundary values of h, extrapolated to
/// eps -> 0 over a ladder eps, eps/2, eps/4.
pub fn o2_real_spectrum_with(rt: &RTransformSpec, x: f64, y: f64, eps: [f64; 3]) -> Result<f64, QError> {
    if matches!(rt, RTransformSpec::PseudoHermitianProduct) {
        for v in [x, y] {
            if v.abs() < 1e-6 {
                return Err(QError::ExceptionalPoint(v));
            }
        }
    }
    if (x - y).abs() < 10.0 * eps[0] {
        return Err(QError::Coincident);
    }
    let f: Vec<C64> = eps.iter().map(|&e| plemelj_combination(rt, x, y, e)).collect::<Result<_, _>>()?;
    let a1 = 2.0 * f[1] - f[0];
    let a2 = 2.0 * f[2] - f[1];
    let v = (4.0 * a2 - a1) / 3.0;
    if v.im.abs() > 1e-8 * (1.0 + v.re.abs()) {
        return Err(QError::NonReal(v.im));
    }
    Ok(v.re)
}

pub fn o2_real_spectrum(rt: &RTransformSpec, x: f64, y: f64) -> Result<f64, QError> {
    o2_real_spectrum_with(rt, x, y, PLEMELJ_EPS)
}

/// -log det[I - (GQ x GP^T) B], principal branch.
pub fn wheel_generating_function(gq: Quaternion22, gp: Quaternion22, b: &Mat4) -> Result<C64, QError> {
    let m = mat4_mul(&kron(gq, gp.transpose()), b);
    let a = mat4_sub(&mat4_identity(), &m);
    let d = crate::numcore::mat4_det(&a);
    if d.norm() < 1e-300 {
        return Err(QError::Pole);
    }
    Ok(-d.ln())
}

/// The mixed block -log(1 - g(z1) gbar(conj z2) B^{11}_{1bar 1bar}).
pub fn wheel_mixed(rt: &RTransformSpec, z1: C64, z2: C64) -> Result<C64, QError> {
    let s1 = solve_green(rt, z1)?;
    let s2 = solve_green(rt, z2)?;
    if s1.branch != Branch::Holomorphic || s2.branch != Branch::Holomorphic {
        return Err(QError::Unsupported("wheel function requires both arguments outside the spectrum"));
    }
    let (a, d) = (s1.g.q11, s2.g.qbb);
    let u = a * d * mixed_rung_component(rt, a, d)?;
    if (1.0 - u).norm() < 1e-300 {
        return Err(QError::Pole);
    }
    Ok(-(1.0 - u).ln())
}

/// Coefficient c_kl of z1^-k conj(z2)^-l in the wheel function, extracted
/// by the trapezoid rule on |z1| = |z2| = radius with `npts` nodes per
/// circle. N^2 cov((1/N) Tr X^k, (1/N) Tr X^dagger^l) = k l c_kl.
pub fn wheel_coefficient(rt: &RTransformSpec, k: usize, l: usize, radius: f64, npts: usize) -> Result<C64, QError> {
    if let Some(b) = spectrum_bound(rt) {
        if radius <= b {
            return Err(QError::Unsupported("contour radius must exceed the spectral radius"));
        }
    }
    let mut acc = C64::new(0.0, 0.0);
    let step = 2.0 * PI / npts as f64;
    let mut prev: Option<C64> = None;
    for i in 0..npts {
        let th = step * i as f64;
        let z1 = C64::from_polar(radius, th);
        for j in 0..npts {
            let ph = step * j as f64;
            let z2 = C64::from_polar(radius, ph);
            let f = wheel_mixed(rt, z1, z2)?;
            if let Some(p) = prev {
                if (f.im - p.im).abs() > PI {
                    return Err(QError::Branch);
                }
            }
            prev = Some(f);
            acc += f * C64::from_polar(1.0, k as f64 * th - l as f64 * ph);
        }
    }
    Ok(acc / (npts * npts) as f64 * radius.powi((k + l) as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{o1_elliptic, o2_biunitary, o2_elliptic, RadialCdfKind};
    use crate::numcore::c;

    fn ell(sigma: f64, tau: f64) -> RTransformSpec {
        RTransformSpec::Elliptic { sigma, tau }
    }

    #[test]
    fn elliptic_green_examples() {
        let rt = ell(1.0, 0.5);
        let s = solve_green(&rt, c(4.0, 0.0)).unwrap();
        assert_eq!(s.branch, Branch::Holomorphic);
        assert!((s.g.q11.re - (4.0 - 14f64.sqrt())).abs() < 1e-14);
        let s = solve_green(&rt, c(0.0, 0.0)).unwrap();
        assert_eq!(s.branch, Branch::Nonholomorphic);
        assert_eq!(s.g.q11, c(0.0, 0.0));
        assert!((o1_from_green(&s) - 1.0 / PI).abs() < 1e-15);
        let s = solve_green(&rt, c(0.5, 0.0)).unwrap();
        assert!((o1_from_green(&s) - o1_elliptic(1.0, 0.5, c(0.5, 0.0))).abs() < 1e-15);
        let big = solve_green(&rt, c(3e3, 4e3)).unwrap();
        assert!((big.g.q11 * c(3e3, 4e3) - 1.0).norm() < 1e-6);
    }

    #[test]
    fn elliptic_density_at_origin() {
        // rho = (1/pi) d G11 / d conj(z)
        let rt = ell(1.0, 0.5);
        let h = 1e-5;
        let gx = (solve_green(&rt, c(h, 0.0)).unwrap().g.q11 - solve_green(&rt, c(-h, 0.0)).unwrap().g.q11) / (2.0 * h);
        let gy = (solve_green(&rt, c(0.0, h)).unwrap().g.q11 - solve_green(&rt, c(0.0, -h)).unwrap().g.q11) / (2.0 * h);
        let rho = (0.5 * (gx + I * gy)).re / PI;
        assert!((rho - 4.0 / (3.0 * PI)).abs() < 1e-8);
    }

    #[test]
    fn elliptic_branches_match_on_boundary() {
        let (sigma, tau) = (1.3, 0.4);
        let rt = ell(sigma, tau);
        for k in 0..12 {
            let th = 0.5 + k as f64 * 0.5;
            let edge = c(sigma * (1.0 + tau) * th.cos(), sigma * (1.0 - tau) * th.sin());
            let inside = solve_green(&rt, edge * (1.0 - 1e-12)).unwrap();
            let outside = solve_green(&rt, edge * (1.0 + 1e-12)).unwrap();
            assert_eq!(inside.branch, Branch::Nonholomorphic);
            assert_eq!(outside.branch, Branch::Holomorphic);
            assert!((inside.g.q11 - outside.g.q11).norm() < 1e-8);
            assert!(o1_from_green(&inside) < 1e-8);
            assert!(inside.near_edge);
        }
    }

    #[test]
    fn newton_reproduces_elliptic_closed_form() {
        let rt = ell(1.0, 0.3);
        for z in [c(0.2, 0.1), c(-0.7, 0.3), c(1.5, 0.4), c(0.1, -2.0)] {
            let a = solve_green(&rt, z).unwrap();
            let b = solve_green_newton(&rt, z).unwrap();
            assert_eq!(a.branch, b.branch);
            assert!(a.g.max_abs_diff(b.g) < 1e-7, "{z}: {:?} vs {:?}", a.g, b.g);
        }
    }

    #[test]
    fn green_decays_as_inverse_z() {
        let kinds = [
            ell(1.0, 0.5),
            RTransformSpec::Biunitary(RadialCdfSpec::new(RadialCdfKind::Product)),
            RTransformSpec::PseudoHermitianProduct,
            RTransformSpec::QuantumScattering { m: 0.5, gamma: 0.7 },
        ];
        for rt in kinds {
            for th in [0.3, 1.7, 2.9, -1.2] {
                let z = C64::from_polar(1e4, th);
                let g = solve_green(&rt, z).unwrap().g.q11;
                assert!((z * g - 1.0).norm() < 2e-3, "{rt:?} {th}: {}", z * g);
            }
        }
    }

    #[test]
    fn biunitary_green_is_on_shell() {
        let rt = RTransformSpec::Biunitary(RadialCdfSpec::new(RadialCdfKind::TruncatedUnitary { kappa: 1.0 }));
        let s = solve_green(&rt, c(0.3, 0.2)).unwrap();
        assert!(s.g.is_on_shell(1e-14));
        let cdf = RadialCdfSpec::new(RadialCdfKind::TruncatedUnitary { kappa: 1.0 });
        assert!((o1_from_green(&s) - crate::analytic::o1_biunitary(&cdf, c(0.3, 0.2).norm())).abs() < 1e-14);
    }

    #[test]
    fn pt_green_examples() {
        let z = c(20.0, 0.0);
        let g = pt_green(z).unwrap();
        // the mean eigenvalue is 4, so g(z) is close to 1/(z - 4)
        assert!(g.im.abs() < 1e-15 && (g.re * 16.0 - 1.0).abs() < 0.05);
        let (p, _) = pt_poly(z, g);
        assert!(p.norm() < 1e-13);
        assert!((4.0 / (1.0 - g).powi(2) + 1.0 / g - z).norm() < 1e-12);
        assert!((pt_right_edge() - 11.0902).abs() < 1e-4);
        assert_eq!(pt_density(12.0).unwrap(), 0.0);
        assert_eq!(pt_density(-0.05).unwrap(), 0.0);
        assert!(pt_density(3.0).unwrap() > 0.0);
    }

    #[test]
    fn pt_density_is_normalized() {
        let (x, w) = crate::numcore::gauss_legendre(200);
        // substitute x = t^2 to soften the endpoint singularity at 0
        let e = pt_right_edge();
        let mut total = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            let t = 0.5 * (xi + 1.0) * e.sqrt();
            total += wi * 0.5 * e.sqrt() * 2.0 * t * pt_density(t * t).unwrap();
        }
        assert!((total - 1.0).abs() < 2e-3, "{total}");
    }

    #[test]
    fn elliptic_rung_and_ginibre_rung() {
        let b = build_rung(&ell(1.0, 0.5), Quaternion22::identity(), Quaternion22::identity()).unwrap();
        for (k, v) in [0.5, 1.0, 1.0, 0.5].iter().enumerate() {
            assert_eq!(b[k][k], c(*v, 0.0));
        }
        let rt = RTransformSpec::Biunitary(RadialCdfSpec::new(RadialCdfKind::Ginibre));
        let gq = solve_green(&rt, c(0.3, 0.1)).unwrap().g;
        let gp = solve_green(&rt, c(-0.2, 0.5)).unwrap().g;
        let b = build_rung(&rt, gq, gp).unwrap();
        assert!((b[1][1] - 1.0).norm() < 1e-12 && (b[2][2] - 1.0).norm() < 1e-12);
        assert!(b[1][2].norm() < 1e-12 && b[2][1].norm() < 1e-12);
    }

    #[test]
    fn qs_rung_zero_coupling_is_identity() {
        let rt = RTransformSpec::QuantumScattering { m: 1e-300, gamma: 1.0 };
        let g = Quaternion22::new(c(0.1, 0.2), c(0.0, 0.3), c(0.0, 0.3), c(0.1, -0.2));
        let b = build_rung(&rt, g, g).unwrap();
        assert!(crate::numcore::mat4_max_abs(&mat4_sub(&b, &mat4_identity())) < 1e-280);
    }

    #[test]
    fn qs_rung_matches_series() {
        let (m, gamma) = (0.7, 0.9);
        let gq = Quaternion22::new(c(0.1, -0.2), c(0.05, 0.15), c(-0.1, 0.1), c(0.2, 0.05));
        let gp = Quaternion22::new(c(-0.15, 0.1), c(0.0, 0.2), c(0.1, 0.0), c(0.05, -0.1));
        let rt = RTransformSpec::QuantumScattering { m, gamma };
        let closed = build_rung(&rt, gq, gp).unwrap();
        let series = build_rung_series_qs(m, gamma, gq, gp, 40);
        assert!(crate::numcore::mat4_max_abs(&mat4_sub(&closed, &series)) < 1e-10);
    }

    #[test]
    fn bethe_salpeter_examples() {
        let gq = Quaternion22::new(c(0.3, 0.1), c(0.0, 0.2), c(0.0, 0.2), c(0.3, -0.1));
        let gp = Quaternion22::new(c(-0.2, 0.1), c(0.0, 0.4), c(0.0, 0.4), c(-0.2, -0.1));
        let free = solve_bethe_salpeter(gq, gp, &crate::numcore::mat4_zero()).unwrap();
        assert!(crate::numcore::mat4_max_abs(&mat4_sub(&free.k, &kron(gq, gp.transpose()))) < 1e-15);
        // Ginibre holomorphic at z1 = conj(z2) = 2: K = (1/4)/(1 - 1/4)
        let rt = ell(1.0, 0.0);
        let k = k_component(&rt, c(2.0, 0.0), c(2.0, 0.0)).unwrap();
        assert!((k - 1.0 / 3.0).norm() < 1e-15);
    }

    #[test]
    fn elliptic_pipeline_matches_closed_form() {
        let rt = ell(1.0, 0.5);
        for (z1, z2) in [(c(0.2, 0.0), c(-0.2, 0.0)), (c(0.4, 0.2), c(-0.3, -0.1)), (c(0.0, 0.3), c(0.6, -0.1))] {
            let a = o2_from_k(&rt, z1, z2, 1e-3).unwrap();
            let b = o2_elliptic(1.0, 0.5, z1, z2).unwrap();
            assert!((a - b).norm() < 1e-4 * b.norm(), "{z1} {z2}: {a} vs {b}");
        }
        let g = ell(1.0, 0.0);
        let a = o2_from_k(&g, c(0.3, 0.1), c(-0.2, -0.4), 1e-3).unwrap();
        let b = o2_elliptic(1.0, 0.0, c(0.3, 0.1), c(-0.2, -0.4)).unwrap();
        assert!((a - b).norm() < 1e-4 * b.norm());
    }

    #[test]
    fn biunitary_pipeline_matches_closed_forms() {
        for kind in [RadialCdfKind::Ginibre, RadialCdfKind::Product, RadialCdfKind::Spherical] {
            let cdf = RadialCdfSpec::new(kind);
            let rt = RTransformSpec::Biunitary(cdf);
            for (z1, z2) in [(c(0.3, 0.0), c(0.0, 0.6)), (c(-0.4, 0.2), c(0.5, 0.3)), (c(0.1, -0.7), c(0.2, 0.2))] {
                let a = o2_from_k(&rt, z1, z2, 1e-3).unwrap();
                let b = o2_biunitary(&cdf, z1, z2).unwrap();
                assert!((a - b).norm() < 1e-4 * b.norm(), "{kind:?} {z1} {z2}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn h_examples() {
        let rt = ell(1.0, 0.0);
        let (z1, z2) = (c(2.0, 0.5), c(-1.5, 1.2));
        let h = h_holomorphic(&rt, z1, z2).unwrap();
        assert!((h - 1.0 / (z1 * z2.conj() - 1.0)).norm() < 1e-14);
        let h = h_holomorphic(&ell(1.0, 0.5), c(3.0, 0.0), c(3.0, 0.0)).unwrap();
        let expect = 4.0 / (-4.0 + (3.0 + 7f64.sqrt()).powi(2));
        assert!((h.re - expect).abs() < 1e-14 && h.im.abs() < 1e-15);
        let h = h_holomorphic(&RTransformSpec::PseudoHermitianProduct, c(20.0, 0.0), c(20.0, 0.0)).unwrap();
        assert!(h.re > 0.0 && h.im.abs() < 1e-15);
        assert!((h.re - 0.0044).abs() < 1e-4);
    }

    #[test]
    fn h_agrees_with_full_ladder() {
        let kinds = [
            ell(1.2, 0.3),
            RTransformSpec::Biunitary(RadialCdfSpec::new(RadialCdfKind::TruncatedUnitary { kappa: 1.0 })),
            RTransformSpec::QuantumScattering { m: 0.5, gamma: 0.7 },
        ];
        for rt in kinds {
            let (z1, z2) = (c(3.0, 2.5), c(-2.0, 3.5));
            let a = h_holomorphic(&rt, z1, z2).unwrap();
            let b = k_component(&rt, z1, z2).unwrap();
            assert!((a - b).norm() < 1e-10 * a.norm(), "{rt:?}");
        }
    }

    #[test]
    fn real_spectrum_symmetry_and_reality() {
        let rt = RTransformSpec::PseudoHermitianProduct;
        for (x, y) in [(1.475, 4.0), (3.975, 7.5), (0.8, 2.2)] {
            let a = o2_real_spectrum(&rt, x, y).unwrap();
            let b = o2_real_spectrum(&rt, y, x).unwrap();
            assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()));
            assert!(a < 0.0);
        }
        // N=100 Monte Carlo reading at this point: -0.0026(1)
        let v = o2_real_spectrum(&rt, 1.475, 4.25).unwrap();
        assert!((v + 0.0027).abs() < 3e-4, "{v}");
        assert!(matches!(o2_real_spectrum(&rt, 0.0, 2.0), Err(QError::ExceptionalPoint(_))));
    }

    #[test]
    fn wheel_examples() {
        let g = Quaternion22::diag(c(0.3, 0.1), c(0.3, -0.1));
        assert_eq!(wheel_generating_function(g, g, &crate::numcore::mat4_zero()).unwrap(), c(0.0, 0.0));
        let rt = ell(1.0, 0.0);
        let c11 = wheel_coefficient(&rt, 1, 1, 3.0, 32).unwrap();
        let c22 = wheel_coefficient(&rt, 2, 2, 3.0, 32).unwrap();
        let c12 = wheel_coefficient(&rt, 1, 2, 3.0, 32).unwrap();
        assert!((c11 - 1.0).norm() < 1e-12);
        assert!((c22 - 0.5).norm() < 1e-12);
        assert!(c12.norm() < 1e-12);
        // the mixed block of the full determinant
        let (z1, z2) = (c(2.0, 1.0), c(-1.0, 2.5));
        let gq = solve_green(&rt, z1).unwrap().g;
        let gp = solve_green(&rt, z2).unwrap().g;
        let b = build_rung(&rt, gq, gp).unwrap();
        let full = wheel_generating_function(gq, gp, &b).unwrap();
        let u = 1.0 / (z1 * z2.conj());
        let expect = -(1.0 - u).ln() - (1.0 - u.conj()).ln();
        assert!((full - expect).norm() < 1e-14);
    }
}

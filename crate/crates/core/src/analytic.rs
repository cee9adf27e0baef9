//! Closed-form large-N results, the exact finite-N Ginibre two-point
//! function and the microscopic bulk kernel.

use crate::ensembles::{EnsembleKind, EnsembleSpec};
use crate::numcore::{log_det, ln_factorial, wirtinger_mixed_richardson, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("ensemble {0} is not biunitarily invariant")]
    Unsupported(String),
    #[error("coincident arguments |z1 - z2| = {0:e}")]
    Coincident(f64),
    #[error("pole: z1 conj(z2) = r_out^2")]
    Pole,
    #[error("N = {n} outside the supported range [2, {max}]")]
    SizeOutOfRange { n: usize, max: usize },
    #[error("log-scaled determinant not representable")]
    Overflow,
    #[error("quadrature did not converge (estimated error {0:e})")]
    Quadrature(f64),
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

/// Radial cumulative distributions of the single-ring ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum RadialCdfKind {
    Ginibre,
    Induced { alpha: f64 },
    TruncatedUnitary { kappa: f64 },
    Spherical,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialCdfSpec {
    pub kind: RadialCdfKind,
    pub r_in: f64,
    /// Infinite for the spherical ensemble.
    pub r_out: f64,
}

impl RadialCdfSpec {
    pub fn new(kind: RadialCdfKind) -> Self {
        let (r_in, r_out) = match kind {
            RadialCdfKind::Ginibre | RadialCdfKind::Product => (0.0, 1.0),
            RadialCdfKind::Induced { alpha } => (alpha.sqrt(), (1.0 + alpha).sqrt()),
            RadialCdfKind::TruncatedUnitary { kappa } => (0.0, (1.0 + kappa).powf(-0.5)),
            RadialCdfKind::Spherical => (0.0, f64::INFINITY),
        };
        Self { kind, r_in, r_out }
    }

    pub fn inside(&self, r: f64) -> bool {
        r > self.r_in && r < self.r_out
    }

    pub fn f(&self, r: f64) -> f64 {
        if r <= self.r_in {
            return 0.0;
        }
        if r >= self.r_out {
            return 1.0;
        }
        match self.kind {
            RadialCdfKind::Ginibre => r * r,
            RadialCdfKind::Induced { alpha } => r * r - alpha,
            RadialCdfKind::TruncatedUnitary { kappa } => kappa * r * r / (1.0 - r * r),
            RadialCdfKind::Spherical => r * r / (1.0 + r * r),
            RadialCdfKind::Product => r,
        }
    }

    /// dF/dr, zero off the support.
    pub fn df(&self, r: f64) -> f64 {
        if !self.inside(r) {
            return 0.0;
        }
        match self.kind {
            RadialCdfKind::Ginibre | RadialCdfKind::Induced { .. } => 2.0 * r,
            RadialCdfKind::TruncatedUnitary { kappa } => 2.0 * kappa * r / (1.0 - r * r).powi(2),
            RadialCdfKind::Spherical => 2.0 * r / (1.0 + r * r).powi(2),
            RadialCdfKind::Product => 1.0,
        }
    }

    /// r^2 as a function of F on the support.
    pub fn r2_of_f(&self, f: f64) -> f64 {
        match self.kind {
            RadialCdfKind::Ginibre => f,
            RadialCdfKind::Induced { alpha } => f + alpha,
            RadialCdfKind::TruncatedUnitary { kappa } => f / (kappa + f),
            RadialCdfKind::Spherical => f / (1.0 - f),
            RadialCdfKind::Product => f * f,
        }
    }

    /// (r1^2 - r2^2)/(F1 - F2) evaluated without cancellation.
    pub fn r2_divided_difference(&self, f1: f64, f2: f64) -> f64 {
        match self.kind {
            RadialCdfKind::Ginibre | RadialCdfKind::Induced { .. } => 1.0,
            RadialCdfKind::TruncatedUnitary { kappa } => kappa / ((kappa + f1) * (kappa + f2)),
            RadialCdfKind::Spherical => 1.0 / ((1.0 - f1) * (1.0 - f2)),
            RadialCdfKind::Product => f1 + f2,
        }
    }

    /// lim_{r -> 0} F(r)/r^2 (infinite for the product ensemble).
    pub fn f_over_r2_at_zero(&self) -> f64 {
        if self.r_in > 0.0 {
            return 0.0;
        }
        match self.kind {
            RadialCdfKind::Ginibre | RadialCdfKind::Induced { .. } | RadialCdfKind::Spherical => 1.0,
            RadialCdfKind::TruncatedUnitary { kappa } => kappa,
            RadialCdfKind::Product => f64::INFINITY,
        }
    }

    /// G_{1 1bar} G_{1bar 1} = F(F - 1)/r^2 = -pi O1(r).
    pub fn x_of_r(&self, r: f64) -> f64 {
        -PI * o1_biunitary(self, r)
    }

    /// The determining sequence along the support, A(x(r)) = r^2/F(r).
    pub fn a_of_r(&self, r: f64) -> f64 {
        let f = self.f(r);
        r * r / f
    }

    /// A(x) in closed form where it is single valued: Ginibre 1,
    /// product 1/(1 - x), spherical (-x)^(-1/2).
    pub fn determining_sequence(&self, x: f64) -> Option<f64> {
        match self.kind {
            RadialCdfKind::Ginibre => Some(1.0),
            RadialCdfKind::Product => Some(1.0 / (1.0 - x)),
            RadialCdfKind::Spherical => Some((-x).powf(-0.5)),
            _ => None,
        }
    }
}

/// Radial CDF of a biunitarily invariant ensemble.
pub fn radial_cdf(spec: &EnsembleSpec) -> Result<RadialCdfSpec, AnalyticError> {
    let kind = match spec.kind {
        EnsembleKind::Ginibre => RadialCdfKind::Ginibre,
        EnsembleKind::InducedGinibre { alpha } => RadialCdfKind::Induced { alpha },
        EnsembleKind::TruncatedUnitary { kappa } => RadialCdfKind::TruncatedUnitary { kappa },
        EnsembleKind::Spherical => RadialCdfKind::Spherical,
        EnsembleKind::ProductGinibre => RadialCdfKind::Product,
        other => return Err(AnalyticError::Unsupported(format!("{other:?}"))),
    };
    Ok(RadialCdfSpec::new(kind))
}

/// O1(r) = F(1 - F)/(pi r^2), zero off the support.
pub fn o1_biunitary(f: &RadialCdfSpec, r: f64) -> f64 {
    if r <= 0.0 {
        return f.f_over_r2_at_zero() / PI;
    }
    if !f.inside(r) {
        return 0.0;
    }
    let fr = f.f(r);
    fr * (1.0 - fr) / (PI * r * r)
}

/// The bracket of the biunitary master formula,
/// [conj(z1)(z1 - z2) O1(r1) + z2 (conj(z1) - conj(z2)) O1(r2)] / (|z1 - z2|^2 (F1 - F2)),
/// rewritten as [(1 - F1 - F2)/pi - conj(z1) z2 DD]/|z1 - z2|^2 with
/// DD = (O1(r1) - O1(r2))/(F1 - F2) expanded so that equal radii are
/// regular.
pub fn master_bracket(f: &RadialCdfSpec, z1: C64, z2: C64) -> C64 {
    let (u1, u2) = (z1.norm_sqr(), z2.norm_sqr());
    let (f1, f2) = (f.f(u1.sqrt()), f.f(u2.sqrt()));
    let d = f.r2_divided_difference(f1, f2);
    let dd = ((1.0 - f1 - f2) / u1 - f2 * (1.0 - f2) * d / (u1 * u2)) / PI;
    ((1.0 - f1 - f2) / PI - z1.conj() * z2 * dd) / (z1 - z2).norm_sqr()
}

/// Generic O2 from the master formula by a Richardson-extrapolated
/// mixed Wirtinger derivative of `master_bracket`, divided by pi.
pub fn o2_biunitary_master(f: &RadialCdfSpec, z1: C64, z2: C64, h: f64) -> Result<C64, AnalyticError> {
    let d = (z1 - z2).norm();
    if d < 1e-10 {
        return Err(AnalyticError::Coincident(d));
    }
    if !f.inside(z1.norm()) || !f.inside(z2.norm()) {
        return Ok(C64::new(0.0, 0.0));
    }
    let g = |a: C64, b: C64| Ok::<_, AnalyticError>(master_bracket(f, a, b));
    Ok(wirtinger_mixed_richardson(g, z1, z2, h)? / PI)
}

/// Closed forms of O2 for each single-ring ensemble.
pub fn o2_biunitary_closed(f: &RadialCdfSpec, z1: C64, z2: C64) -> C64 {
    if !f.inside(z1.norm()) || !f.inside(z2.norm()) {
        return C64::new(0.0, 0.0);
    }
    let d4 = (z1 - z2).norm_sqr().powi(2);
    let p = z1 * z2.conj();
    let pi2 = PI * PI;
    match f.kind {
        RadialCdfKind::Ginibre => -(1.0 - p) / (pi2 * d4),
        RadialCdfKind::Induced { alpha } => (1.0 + alpha - p) * (alpha - p) / (pi2 * p * d4),
        RadialCdfKind::TruncatedUnitary { kappa } => (p * (1.0 + kappa) - 1.0) / (pi2 * d4),
        RadialCdfKind::Spherical => C64::new(-1.0 / (pi2 * d4), 0.0),
        RadialCdfKind::Product => {
            let (a1, a2) = (z1.norm(), z2.norm());
            let num = 2.0 * (a1 + a2) * (p + a1 * a2) - (z1 + z2).norm_sqr() - 4.0 * a1 * a2;
            num / (4.0 * pi2 * a1 * a2 * d4)
        }
    }
}

/// O2 for a single-ring ensemble (closed-form path).
pub fn o2_biunitary(f: &RadialCdfSpec, z1: C64, z2: C64) -> Result<C64, AnalyticError> {
    let d = (z1 - z2).norm();
    if d < 1e-10 {
        return Err(AnalyticError::Coincident(d));
    }
    Ok(o2_biunitary_closed(f, z1, z2))
}

/// h = 1/(z1 conj(z2) - r_out^2).
pub fn h_universal(z1: C64, z2: C64, r_out: f64) -> Result<C64, AnalyticError> {
    let den = z1 * z2.conj() - r_out * r_out;
    if den.norm() < 1e-14 * (1.0 + r_out * r_out) {
        return Err(AnalyticError::Pole);
    }
    Ok(1.0 / den)
}

/// Phi(|w|) = -(1 - (1 + |w|^2) e^{-|w|^2})/(pi^2 |w|^4).
pub fn phi_microscopic(omega_abs: f64) -> f64 {
    let x = omega_abs * omega_abs;
    let pi2 = PI * PI;
    if x < 0.1 {
        // 1 - (1+x)e^-x = sum_{n>=2} (-1)^n (n-1) x^n / n!
        let mut s = 0.0;
        let mut term = 0.5; // (n-1)/n! x^{n-2} at n = 2
        for n in 2..20 {
            s += term;
            let nf = n as f64;
            term *= -x * nf / ((nf - 1.0) * (nf + 1.0));
        }
        return -s / pi2;
    }
    -(1.0 - (1.0 + x) * (-x).exp()) / (pi2 * x * x)
}

fn simpson_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, AnalyticError> {
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64, AnalyticError> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let err = left + right - whole;
        if err.abs() <= 15.0 * tol {
            return Ok(left + right + err / 15.0);
        }
        if depth == 0 {
            return Err(AnalyticError::Quadrature(err.abs()));
        }
        Ok(rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Integral of Phi(|u|) over the disk |u| < radius (radius may be infinite),
/// by adaptive quadrature in t = |u|^2 mapped to s = t/(1+t).
pub fn phi_disk_integral(radius: f64) -> Result<f64, AnalyticError> {
    let smax = if radius.is_infinite() { 1.0 } else { radius * radius / (1.0 + radius * radius) };
    // d^2u = pi dt, dt = ds/(1-s)^2
    let g = |s: f64| {
        if s >= 1.0 {
            return -1.0 / PI; // pi * Phi(sqrt t) * (1+t)^2 as t -> inf
        }
        let t = s / (1.0 - s);
        PI * phi_microscopic(t.sqrt()) / ((1.0 - s) * (1.0 - s))
    };
    simpson_adaptive(&g, 0.0, smax, 1e-13)
}

/// The plane integral of Phi; equals -1/pi.
pub fn phi_plane_integral() -> Result<f64, AnalyticError> {
    phi_disk_integral(f64::INFINITY)
}

pub const EXACT_O2_MAX_N: usize = 300;

/// The determinant expression for the finite-N Ginibre two-point function,
/// -(N/(pi^2 Gamma(N))) exp(-N(|z1|^2+|z2|^2)) det[h_ij], i,j = 0..N-2,
/// with h_ij = N^{j+3}/(pi (j+1)!) * int d^2l conj(l)^i l^j
///   [|z1-l|^2 |z2-l|^2 + (z1-l)(conj(z2)-conj(l))/N] e^{-N|l|^2}.
pub fn o2_exact_ginibre_determinant(n: usize, z1: C64, z2: C64) -> Result<C64, AnalyticError> {
    o2_exact_ginibre_determinant_limited(n, z1, z2, EXACT_O2_MAX_N)
}

pub fn o2_exact_ginibre_determinant_limited(n: usize, z1: C64, z2: C64, max_n: usize) -> Result<C64, AnalyticError> {
    if n < 2 || n > max_n {
        return Err(AnalyticError::SizeOutOfRange { n, max: max_n });
    }
    if !(z1.is_finite() && z2.is_finite()) {
        return Err(AnalyticError::Invalid("non-finite argument".into()));
    }
    let nf = n as f64;
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    // bracket = sum_{p,q} m[p][q] l^p conj(l)^q
    let a = [z1 * z2, -(z1 + z2), one];
    let cc = [z1, -one, zero];
    let dd = [z2.conj(), -one, zero];
    let mut m = [[zero; 3]; 3];
    for p in 0..3 {
        for q in 0..3 {
            m[p][q] = a[p] * a[q].conj() + cc[p] * dd[q] / nf;
        }
    }
    // Moments: int conj(l)^a l^b e^{-N|l|^2} = delta_ab pi a!/N^{a+1}.
    // Row i carries i!/N^{i+1}, column j carries N^{j+3}/(pi (j+1)!), so the
    // reduced entry is sum_p m[p][q] (i+q)!/(i! N^q) with q = j + p - i.
    let dim = n - 1;
    let mut h = vec![zero; dim * dim];
    for i in 0..dim {
        for j in i.saturating_sub(2)..(i + 3).min(dim) {
            let mut s = zero;
            for (p, row) in m.iter().enumerate() {
                let q = j as i64 + p as i64 - i as i64;
                if !(0..=2).contains(&q) {
                    continue;
                }
                let q = q as usize;
                let rising: f64 = (1..=q).map(|t| (i + t) as f64).product();
                s += row[q] * (rising / nf.powi(q as i32));
            }
            h[i * dim + j] = s;
        }
    }
    let (log_abs, phase) = log_det(&mut h, dim);
    if log_abs == f64::NEG_INFINITY {
        return Ok(zero);
    }
    let mut logs = 0.0;
    for i in 0..dim {
        logs += ln_factorial(i) - (i + 1) as f64 * nf.ln();
    }
    for j in 0..dim {
        logs += (j + 3) as f64 * nf.ln() - ln_factorial(j + 1);
    }
    logs += nf.ln() - ln_factorial(n - 1) - nf * (z1.norm_sqr() + z2.norm_sqr()) - 2.0 * PI.ln();
    let total = log_abs + logs;
    if total > 700.0 {
        return Err(AnalyticError::Overflow);
    }
    Ok(-phase * total.exp())
}

/// Finite-N Ginibre O2 normalized like the Monte Carlo estimator
/// (1/N) sum_{k != l} O_kl delta delta: the determinant expression divided
/// by N + 1.
pub fn o2_exact_ginibre(n: usize, z1: C64, z2: C64) -> Result<C64, AnalyticError> {
    Ok(o2_exact_ginibre_determinant(n, z1, z2)? / (n as f64 + 1.0))
}

pub fn elliptic_inside(sigma: f64, tau: f64, z: C64) -> bool {
    (z.re / (1.0 + tau)).powi(2) + (z.im / (1.0 - tau)).powi(2) < sigma * sigma
}

/// O1 of the elliptic ensemble; zero outside the ellipse.
pub fn o1_elliptic(sigma: f64, tau: f64, z: C64) -> f64 {
    if !elliptic_inside(sigma, tau, z) {
        return 0.0;
    }
    let s2 = sigma * sigma;
    let w = z - z.conj() * tau;
    (1.0 - w.norm_sqr() / (s2 * (1.0 - tau * tau).powi(2))) / (PI * s2)
}

/// Numerator P(z1, z2) = -pi^2 |z1 - z2|^4 O2 of the elliptic two-point
/// function.
pub fn elliptic_numerator(sigma: f64, tau: f64, z1: C64, z2: C64) -> C64 {
    let s2 = sigma * sigma;
    let t2 = 1.0 - tau * tau;
    (s2 * t2 * t2 - (z1 - z2.conj() * tau) * (z2.conj() - z1 * tau)) / (s2 * t2)
}

pub fn o2_elliptic(sigma: f64, tau: f64, z1: C64, z2: C64) -> Result<C64, AnalyticError> {
    let d = (z1 - z2).norm();
    if d < 1e-10 {
        return Err(AnalyticError::Coincident(d));
    }
    if !elliptic_inside(sigma, tau, z1) || !elliptic_inside(sigma, tau, z2) {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok(-elliptic_numerator(sigma, tau, z1, z2) / (PI * PI * d.powi(4)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::c;

    fn all_kinds() -> Vec<RadialCdfSpec> {
        [
            RadialCdfKind::Ginibre,
            RadialCdfKind::Induced { alpha: 0.5 },
            RadialCdfKind::TruncatedUnitary { kappa: 1.0 },
            RadialCdfKind::Spherical,
            RadialCdfKind::Product,
        ]
        .into_iter()
        .map(RadialCdfSpec::new)
        .collect()
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(RadialCdfSpec::new(RadialCdfKind::Ginibre).f(0.5), 0.25);
        let ind = RadialCdfSpec::new(RadialCdfKind::Induced { alpha: 1.0 });
        assert_eq!((ind.r_in, ind.r_out), (1.0, 2f64.sqrt()));
        assert_eq!(RadialCdfSpec::new(RadialCdfKind::Spherical).f(1.0), 0.5);
    }

    #[test]
    fn cdf_consistency() {
        for f in all_kinds() {
            let top = if f.r_out.is_finite() { f.r_out } else { 5.0 };
            let mut prev = 0.0;
            for k in 1..200 {
                let r = f.r_in + (top - f.r_in) * k as f64 / 200.0;
                let v = f.f(r);
                assert!(v >= prev);
                prev = v;
                assert!((f.r2_of_f(v) - r * r).abs() < 1e-12 * (1.0 + r * r));
                let h = 1e-6;
                let fd = (f.f(r + h) - f.f(r - h)) / (2.0 * h);
                assert!((fd - f.df(r)).abs() < 1e-6 * (1.0 + fd.abs()), "{:?} r={r}", f.kind);
            }
        }
    }

    #[test]
    fn determining_sequence_matches_parametric_form() {
        for f in all_kinds() {
            for k in 1..20 {
                let top = if f.r_out.is_finite() { f.r_out } else { 3.0 };
                let r = f.r_in + (top - f.r_in) * k as f64 / 20.0;
                if let Some(a) = f.determining_sequence(f.x_of_r(r)) {
                    assert!((a - f.a_of_r(r)).abs() < 1e-12 * a, "{:?}", f.kind);
                }
            }
        }
    }

    #[test]
    fn o1_examples() {
        let g = RadialCdfSpec::new(RadialCdfKind::Ginibre);
        assert!((o1_biunitary(&g, 1e-9) - 1.0 / PI).abs() < 1e-12);
        assert!((o1_biunitary(&g, 0.0) - 1.0 / PI).abs() < 1e-15);
        for f in all_kinds() {
            if f.r_out.is_finite() {
                assert_eq!(o1_biunitary(&f, f.r_out), 0.0);
            }
        }
        let p = RadialCdfSpec::new(RadialCdfKind::Product);
        assert!((o1_biunitary(&p, 0.5) - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn ginibre_closed_form_value() {
        let g = RadialCdfSpec::new(RadialCdfKind::Ginibre);
        let v = o2_biunitary(&g, c(0.5, 0.0), c(-0.5, 0.0)).unwrap();
        assert!((v.re + 1.25 / (PI * PI)).abs() < 1e-15);
        assert!((v.re + 0.126651).abs() < 1e-6);
    }

    #[test]
    fn master_formula_matches_closed_forms() {
        let pairs = [
            (c(0.3, 0.0), c(0.0, 0.6)),
            (c(0.2, 0.1), c(-0.4, 0.3)),
            (c(0.5, -0.3), c(0.1, 0.25)),
            (c(-0.45, 0.1), c(0.3, -0.35)),
        ];
        for f in all_kinds() {
            for (z1, z2) in pairs {
                let (z1, z2) = match f.kind {
                    RadialCdfKind::Induced { .. } => {
                        let lift = |z: C64| z / z.norm() * (0.75 + 0.3 * z.norm());
                        (lift(z1), lift(z2))
                    }
                    _ => (z1, z2),
                };
                let closed = o2_biunitary_closed(&f, z1, z2);
                let fd = o2_biunitary_master(&f, z1, z2, 1e-3).unwrap();
                assert!((closed - fd).norm() < 1e-5 * closed.norm(), "{:?} {z1} {z2}: {closed} vs {fd}", f.kind);
            }
        }
    }

    #[test]
    fn master_formula_equal_radii() {
        let g = RadialCdfSpec::new(RadialCdfKind::Ginibre);
        let z1 = c(0.5, 0.0);
        let z2 = C64::from_polar(0.5, 1.3);
        let closed = o2_biunitary_closed(&g, z1, z2);
        let fd = o2_biunitary_master(&g, z1, z2, 1e-3).unwrap();
        assert!((closed - fd).norm() < 1e-6 * closed.norm());
    }

    #[test]
    fn induced_approaches_ginibre() {
        let g = RadialCdfSpec::new(RadialCdfKind::Ginibre);
        let ind = RadialCdfSpec::new(RadialCdfKind::Induced { alpha: 1e-9 });
        let (z1, z2) = (c(0.3, 0.2), c(-0.4, 0.1));
        let a = o2_biunitary(&g, z1, z2).unwrap();
        let b = o2_biunitary(&ind, z1, z2).unwrap();
        assert!((a - b).norm() < 1e-6 * a.norm());
    }

    #[test]
    fn spherical_closed_form() {
        let s = RadialCdfSpec::new(RadialCdfKind::Spherical);
        let (z1, z2) = (c(1.0, 0.0), c(0.0, 1.0));
        let v = o2_biunitary(&s, z1, z2).unwrap();
        assert!((v.re + 1.0 / (4.0 * PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn coincident_arguments_rejected() {
        let g = RadialCdfSpec::new(RadialCdfKind::Ginibre);
        assert!(matches!(o2_biunitary(&g, c(0.1, 0.1), c(0.1, 0.1)), Err(AnalyticError::Coincident(_))));
    }

    #[test]
    fn h_universal_examples() {
        assert!((h_universal(c(2.0, 0.0), c(2.0, 0.0), 1.0).unwrap() - 1.0 / 3.0).norm() < 1e-15);
        let z1 = c(2.0, 1.0);
        let z2 = c(-0.5, 0.7);
        assert!((h_universal(z1, z2, 0.0).unwrap() - 1.0 / (z1 * z2.conj())).norm() < 1e-15);
        let v = h_universal(c(2.0, 0.0), c(0.0, 2.0), 1.0).unwrap();
        assert!((v - 1.0 / c(-1.0, -4.0)).norm() < 1e-15);
        assert!(matches!(h_universal(c(1.0, 0.0), c(1.0, 0.0), 1.0), Err(AnalyticError::Pole)));
    }

    #[test]
    fn phi_values() {
        let pi2 = PI * PI;
        assert!((phi_microscopic(0.0) + 1.0 / (2.0 * pi2)).abs() < 1e-16);
        assert!((phi_microscopic(1e-3) + 0.050661).abs() < 1e-6);
        let w2 = -(1.0 - 5.0 * (-4.0f64).exp()) / (16.0 * pi2);
        assert!((phi_microscopic(2.0) - w2).abs() < 1e-15);
        assert!((phi_microscopic(2.0) + 0.005753).abs() < 1e-6);
        let far = -1.0 / (pi2 * 6f64.powi(4));
        assert!(((phi_microscopic(6.0) - far) / far).abs() < 1e-6 * 1e2);
        // continuity at the series switch
        let a = phi_microscopic(0.1f64.sqrt() - 1e-12);
        let b = phi_microscopic(0.1f64.sqrt() + 1e-12);
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn phi_integral() {
        let v = phi_plane_integral().unwrap();
        assert!((v + 1.0 / PI).abs() < 1e-8, "{v}");
        let tail = v - phi_disk_integral(10.0).unwrap();
        assert!((tail + 1.0 / (PI * 100.0)).abs() < 1e-8);
    }

    #[test]
    fn exact_n2_origin() {
        let v = o2_exact_ginibre_determinant(2, c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!((v.re + 6.0 / (PI * PI)).abs() < 1e-12);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn exact_conjugate_symmetry() {
        for n in [3, 7, 20] {
            let (z1, z2) = (c(0.2, -0.1), c(-0.3, 0.4));
            let a = o2_exact_ginibre(n, z1, z2).unwrap();
            let b = o2_exact_ginibre(n, z2, z1).unwrap();
            assert!((a - b.conj()).norm() < 1e-10 * a.norm());
        }
    }

    #[test]
    fn exact_size_limits() {
        assert!(o2_exact_ginibre(1, c(0.0, 0.0), c(0.1, 0.0)).is_err());
        assert!(o2_exact_ginibre(301, c(0.0, 0.0), c(0.1, 0.0)).is_err());
        assert!(o2_exact_ginibre(300, c(0.0, 0.0), c(0.1, 0.0)).is_ok());
    }

    #[test]
    fn elliptic_reduces_to_ginibre() {
        let g = RadialCdfSpec::new(RadialCdfKind::Ginibre);
        let (z1, z2) = (c(0.3, 0.1), c(-0.2, -0.5));
        let a = o2_elliptic(1.0, 0.0, z1, z2).unwrap();
        let b = o2_biunitary(&g, z1, z2).unwrap();
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn elliptic_petermann_limit() {
        // P(z, z) = O1(z)/rho(z)
        let (s, t) = (1.2, 0.4);
        for z in [c(0.0, 0.0), c(0.5, 0.2), c(-0.9, 0.3)] {
            let p = elliptic_numerator(s, t, z, z);
            let rho = 1.0 / (PI * s * s * (1.0 - t * t));
            assert!((p.re - o1_elliptic(s, t, z) / rho).abs() < 1e-13);
        }
        assert!((o1_elliptic(1.0, 0.5, c(0.5, 0.0)) - 0.2829).abs() < 1e-4);
    }
}

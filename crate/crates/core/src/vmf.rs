//! von Mises-Fisher machinery.
//!
//! The trainer never evaluates any of this: the normalizer `c_p(1)` cancels out of
//! the hinge objective. These functions exist to check that the generative model
//! behind the objective really is a product of vMF densities with unit
//! concentration, by comparing the closed-form normalizer against direct numerical
//! integration over the sphere. Everything is kept in log space because `c_p(κ)`
//! underflows quickly as `p` grows.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::sphere::UnitVector;

/// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log_gamma needs x > 0, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx).
        return (PI / (PI * x).sin()).ln() - ln_gamma_unchecked(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Modified Bessel function of the first kind, `I_r(κ)`.
pub fn bessel_i(order: f64, kappa: f64) -> Result<f64> {
    Ok(log_bessel_i(order, kappa)?.exp())
}

/// `ln I_r(κ)` from the power series `Σ (κ/2)^{2m+r} / (m! Γ(m+r+1))`.
///
/// The series is summed relative to its leading term so large orders do not
/// overflow. Terms are added until one falls below `1e-16` of the running sum.
pub fn log_bessel_i(order: f64, kappa: f64) -> Result<f64> {
    if !(order >= 0.0) || !(kappa >= 0.0) || !order.is_finite() || !kappa.is_finite() {
        return Err(Error::Domain(format!(
            "bessel_i needs order >= 0 and kappa >= 0, got ({order}, {kappa})"
        )));
    }
    if kappa == 0.0 {
        return Ok(if order == 0.0 { 0.0 } else { f64::NEG_INFINITY });
    }
    let half = 0.5 * kappa;
    let quarter_sq = half * half;
    let log_lead = order * half.ln() - ln_gamma_unchecked(order + 1.0);

    let mut term = 1.0;
    let mut sum = 1.0;
    let mut m = 0.0;
    loop {
        m += 1.0;
        term *= quarter_sq / (m * (m + order));
        sum += term;
        // Once the term ratio is below one the tail is bounded by a geometric series.
        if term < 1e-16 * sum && quarter_sq < m * (m + order) {
            break;
        }
        if m > 10_000.0 {
            return Err(Error::Domain(format!(
                "bessel_i series did not converge for kappa = {kappa}"
            )));
        }
    }
    Ok(log_lead + sum.ln())
}

/// `ln c_p(κ) = (p/2 − 1) ln κ − (p/2) ln 2π − ln I_{p/2−1}(κ)`.
pub fn log_norm_const(p: usize, kappa: f64) -> Result<f64> {
    if p < 2 {
        return Err(Error::Domain(format!(
            "vMF needs dimension p >= 2, got {p}"
        )));
    }
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!(
            "normalizer needs kappa > 0, got {kappa}"
        )));
    }
    let order = 0.5 * p as f64 - 1.0;
    Ok(order * kappa.ln() - 0.5 * p as f64 * (2.0 * PI).ln() - log_bessel_i(order, kappa)?)
}

/// Parameters of a vMF distribution on `S^{p-1}`.
#[derive(Clone, Debug)]
pub struct VmfParams {
    mu: UnitVector,
    kappa: f64,
}

impl VmfParams {
    pub fn new(mu: UnitVector, kappa: f64) -> Result<Self> {
        if (crate::sphere::norm(mu.as_slice()) - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(
                "vMF mean direction must have unit norm".into(),
            ));
        }
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::Domain(format!("kappa must be >= 0, got {kappa}")));
        }
        Ok(VmfParams { mu, kappa })
    }

    pub fn mu(&self) -> &UnitVector {
        &self.mu
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.mu.dim()
    }
}

/// `ln f(x; μ, κ) = ln c_p(κ) + κ · x·μ`.
pub fn vmf_log_density(params: &VmfParams, x: &UnitVector) -> Result<f64> {
    if x.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            actual: x.dim(),
        });
    }
    Ok(log_norm_const(params.dim(), params.kappa)? + params.kappa * x.dot(&params.mu))
}

/// `J_p = ∫₀^π sin^p x dx = √π Γ((1+p)/2) / Γ(1 + p/2)`.
pub fn sin_power_integral(p: u32) -> f64 {
    let p = p as f64;
    (0.5 * PI.ln() + ln_gamma_unchecked(0.5 * (1.0 + p)) - ln_gamma_unchecked(1.0 + 0.5 * p)).exp()
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to relative tolerance `rel_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    const PANELS: usize = 16;
    let width = (b - a) / PANELS as f64;
    let panels: Vec<(f64, f64, f64, f64, f64, f64)> = (0..PANELS)
        .map(|i| {
            let lo = a + i as f64 * width;
            let hi = if i + 1 == PANELS { b } else { lo + width };
            let (flo, fmid, fhi) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            (lo, hi, flo, fmid, fhi, simpson(lo, hi, flo, fmid, fhi))
        })
        .collect();
    // The coarse estimate sets the absolute error budget shared by the panels.
    let coarse: f64 = panels.iter().map(|p| p.5.abs()).sum();
    let tol = rel_tol * coarse.max(f64::MIN_POSITIVE) / PANELS as f64;
    panels
        .into_iter()
        .map(|(lo, hi, flo, fmid, fhi, whole)| {
            adaptive_simpson(&f, lo, hi, flo, fmid, fhi, whole, tol, 40)
        })
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || delta.abs() <= 1e-15 * (left + right).abs() {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Numerically integrates `exp(κ cos θ₁)` over `S^{p-1}`.
///
/// Reduces the surface integral to polar coordinates around the mean direction: the
/// `θ₁` integral `∫₀^π exp(κ cos θ) sin^{p−2} θ dθ` is done by quadrature, and the
/// remaining angles contribute the surface area factor `2π^{(p−1)/2} / Γ((p−1)/2)`.
/// Intended for small `p`; the result is accurate to about `1e-8` relative.
pub fn numeric_normalization_oracle(p: usize, kappa: f64) -> Result<f64> {
    if p < 2 {
        return Err(Error::Domain(format!(
            "vMF needs dimension p >= 2, got {p}"
        )));
    }
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("kappa must be > 0, got {kappa}")));
    }
    let power = (p - 2) as i32;
    let theta_integral = integrate(
        |t: f64| (kappa * t.cos()).exp() * t.sin().powi(power),
        0.0,
        PI,
        1e-12,
    );
    let half = 0.5 * (p as f64 - 1.0);
    let remaining = (2.0f64.ln() + half * PI.ln() - ln_gamma_unchecked(half)).exp();
    Ok(remaining * theta_integral)
}

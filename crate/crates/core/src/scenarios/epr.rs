//! Two particles in an approximate eigenstate of relative position and total
//! momentum:
//!
//! ```text
//! psi(x, x') = K exp(-(x - x' - a)^2 / 4 sigma^2) exp(-tau^2 (x + x')^2 / 4 hbar^2)
//!              exp(i p0 (x + x') / 2 hbar)
//! ```
//!
//! `X` is measured on the first particle and `P'` on the second; both `X`
//! and `P` of the first particle are estimated from the pair of results.
//!
//! The numeric path samples `psi` in sheared coordinates `(x, u)` with
//! `u = x' - x + a`, so one axis resolves `sigma` and the other `hbar/tau`.
//! At fixed `x`, the transform over `x'` is the transform over `u` up to the
//! phase `exp(-i p' (x - a) / hbar)`, which cancels in every estimate.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EprParams {
    pub sigma: f64,
    pub tau: f64,
    pub a: f64,
    pub p0: f64,
    pub hbar: f64,
}

impl Default for EprParams {
    fn default() -> Self {
        Self {
            sigma: 0.1,
            tau: 0.1,
            a: 0.0,
            p0: 1.0,
            hbar: 1.0,
        }
    }
}

impl EprParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma", self.sigma), ("tau", self.tau), ("hbar", self.hbar)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.a.is_finite() || !self.p0.is_finite() {
            return Err(Error::InvalidParameter("a and p0 must be finite".into()));
        }
        Ok(())
    }

    /// Optimal estimate of `P` given the result `p'`.
    pub fn momentum_estimate(&self, p_prime: f64) -> f64 {
        let h2 = self.hbar * self.hbar;
        let st2 = (self.sigma * self.tau).powi(2);
        (h2 * (self.p0 - p_prime) + st2 * p_prime) / (h2 + st2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EprReport {
    pub dispersion_x: f64,
    pub inaccuracy_x: f64,
    pub dispersion_p: f64,
    pub inaccuracy_p: f64,
    /// `Delta X eps(P) + eps(X) Delta P + eps(X) eps(P)`.
    pub ungen_lhs: f64,
    /// `hbar / 2`.
    pub ungen_rhs: f64,
}

impl EprReport {
    fn new(dx: f64, ex: f64, dp: f64, ep: f64, hbar: f64) -> Self {
        Self {
            dispersion_x: dx,
            inaccuracy_x: ex,
            dispersion_p: dp,
            inaccuracy_p: ep,
            ungen_lhs: dx * ep + ex * dp + ex * ep,
            ungen_rhs: hbar / 2.0,
        }
    }

    /// Largest relative difference over the four statistics, with the
    /// inaccuracy of `X` compared in absolute terms.
    pub fn max_relative_gap(&self, other: &EprReport) -> f64 {
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
        rel(self.dispersion_x, other.dispersion_x)
            .max(rel(self.dispersion_p, other.dispersion_p))
            .max(rel(self.inaccuracy_p, other.inaccuracy_p))
            .max((self.inaccuracy_x - other.inaccuracy_x).abs())
    }
}

pub fn epr_closed_form(params: &EprParams) -> Result<EprReport> {
    params.validate()?;
    let EprParams { sigma, tau, hbar, .. } = *params;
    let h2 = hbar * hbar;
    let st2 = (sigma * tau).powi(2);
    let root = (h2 + st2).sqrt();
    Ok(EprReport::new(
        root / (2.0 * tau),
        0.0,
        (h2 - st2).abs() / (2.0 * sigma * root),
        hbar * tau / root,
        hbar,
    ))
}

/// Sampling of the sheared `(x, u)` plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EprGrid {
    pub points_per_axis: usize,
    pub x_half_width: f64,
    pub u_spacing: f64,
}

impl EprGrid {
    /// 256 points per axis; `x` spans eight times the spread `hbar/(2 tau)`
    /// on each side and `u` is sampled at `sigma / 2.5`.
    pub fn recommended(params: &EprParams) -> Self {
        Self {
            points_per_axis: 256,
            x_half_width: 8.0 * params.hbar / (2.0 * params.tau),
            u_spacing: params.sigma / 2.5,
        }
    }

    pub fn x_spacing(&self) -> f64 {
        2.0 * self.x_half_width / self.points_per_axis as f64
    }
}

/// `2 pi k / (n h)` with `k` wrapped to `[-n/2, n/2)`.
fn wavenumbers(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let kk = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
            2.0 * std::f64::consts::PI * kk / (n as f64 * h)
        })
        .collect()
}

/// Spectral derivative of every line of `data` (`n x n`, row-major) along
/// rows (`axis = 1`) or columns (`axis = 0`).
fn spectral_derivative(data: &[Complex<f64>], n: usize, h: f64, axis: usize, planner: &mut FftPlanner<f64>) -> Vec<Complex<f64>> {
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let k = wavenumbers(n, h);
    let mut out = vec![Complex::new(0.0, 0.0); n * n];
    let mut line = vec![Complex::new(0.0, 0.0); n];
    for l in 0..n {
        for m in 0..n {
            line[m] = if axis == 1 { data[l * n + m] } else { data[m * n + l] };
        }
        fwd.process(&mut line);
        for m in 0..n {
            // Drop the unpaired Nyquist mode.
            let km = if m == n / 2 { 0.0 } else { k[m] };
            line[m] *= Complex::new(0.0, km) / n as f64;
        }
        inv.process(&mut line);
        for m in 0..n {
            if axis == 1 {
                out[l * n + m] = line[m];
            } else {
                out[m * n + l] = line[m];
            }
        }
    }
    out
}

/// Grid evaluation of the optimal estimates and their statistics. Fails with
/// a grid-resolution error if any statistic is more than `1e-3` (relative)
/// away from the closed form.
pub fn epr_numeric(params: &EprParams, grid: &EprGrid) -> Result<EprReport> {
    params.validate()?;
    let n = grid.points_per_axis;
    if n < 16 || n % 2 != 0 {
        return Err(Error::InvalidParameter(format!("grid needs an even number of points >= 16, got {n}")));
    }
    let EprParams { sigma, tau, a, p0, hbar } = *params;
    let hx = grid.x_spacing();
    let hu = grid.u_spacing;
    let xs: Vec<f64> = (0..n).map(|i| -grid.x_half_width + i as f64 * hx).collect();
    let us: Vec<f64> = (0..n).map(|j| (j as f64 - (n / 2) as f64) * hu).collect();

    // Row i: fixed x; column j: u.
    let mut psi = vec![Complex::new(0.0, 0.0); n * n];
    for (i, &x) in xs.iter().enumerate() {
        for (j, &u) in us.iter().enumerate() {
            let s = 2.0 * x + u - a;
            let modulus = (-(u * u) / (4.0 * sigma * sigma) - tau * tau * s * s / (4.0 * hbar * hbar)).exp();
            let c = C64::from_polar(modulus, p0 * s / (2.0 * hbar));
            psi[i * n + j] = Complex::new(c.re, c.im);
        }
    }
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * hx * hu;
    for z in &mut psi {
        *z /= norm.sqrt();
    }

    let mut planner = FftPlanner::new();
    let d_x = spectral_derivative(&psi, n, hx, 0, &mut planner);
    let d_u = spectral_derivative(&psi, n, hu, 1, &mut planner);
    // P psi = -i hbar (d/dx at fixed u - d/du)
    let mut p_psi: Vec<Complex<f64>> = d_x
        .iter()
        .zip(&d_u)
        .map(|(dx, du)| (dx - du) * Complex::new(0.0, -hbar))
        .collect();

    let fwd = planner.plan_fft_forward(n);
    let mut phi = psi.clone();
    for i in 0..n {
        fwd.process(&mut phi[i * n..(i + 1) * n]);
        fwd.process(&mut p_psi[i * n..(i + 1) * n]);
    }

    // With the unitary transform, outcome (x_i, p'_j) has probability
    // |phi_ij|^2 hx hu / n after the factor from the discrete transform.
    let scale = hx * hu / n as f64;
    let (mut mean_x, mut mean_x2, mut mean_f, mut mean_f2, mut eps_p2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let z = phi[i * n + j];
            let pz = p_psi[i * n + j];
            let prob = z.norm_sqr() * scale;
            total += prob;
            mean_x += prob * xs[i];
            mean_x2 += prob * xs[i] * xs[i];
            if z.norm_sqr() > 0.0 {
                let f = (pz / z).re;
                mean_f += prob * f;
                mean_f2 += prob * f * f;
                eps_p2 += (pz - z * f).norm_sqr() * scale;
            } else {
                eps_p2 += pz.norm_sqr() * scale;
            }
        }
    }
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::GridResolution {
            what: "EPR wavefunction normalisation",
            discrepancy: (total - 1.0).abs(),
        });
    }
    let dx = (mean_x2 - mean_x * mean_x).max(0.0).sqrt();
    let dp = (mean_f2 - mean_f * mean_f).max(0.0).sqrt();
    // The position estimate is x itself, so its inaccuracy vanishes identically.
    let report = EprReport::new(dx, 0.0, dp, eps_p2.sqrt(), hbar);
    let closed = epr_closed_form(params)?;
    let gap = report.max_relative_gap(&closed);
    if gap > 1e-3 {
        return Err(Error::GridResolution {
            what: "EPR statistics against the closed form",
            discrepancy: gap,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let r = epr_closed_form(&EprParams::default()).unwrap();
        assert!((r.dispersion_x - 1.0001_f64.sqrt() / 0.2).abs() < 1e-12);
        assert!((r.dispersion_x - 5.00025).abs() < 1e-5);
        assert!((r.inaccuracy_p - 0.1 / 1.0001_f64.sqrt()).abs() < 1e-15);
        assert!((r.dispersion_p - 0.9999 / (0.2 * 1.0001_f64.sqrt())).abs() < 1e-12);
        assert_eq!(r.inaccuracy_x, 0.0);
    }

    #[test]
    fn ungen_saturated_for_any_parameters() {
        for (sigma, tau, hbar) in [(0.1, 0.1, 1.0), (0.3, 0.05, 2.0), (1.7, 0.9, 0.5)] {
            let p = EprParams { sigma, tau, hbar, ..EprParams::default() };
            let r = epr_closed_form(&p).unwrap();
            assert!((r.ungen_lhs - hbar / 2.0).abs() < 1e-14 * hbar);
        }
    }

    #[test]
    fn small_parameter_limits() {
        let p = EprParams { sigma: 1e-3, tau: 1e-3, ..EprParams::default() };
        let r = epr_closed_form(&p).unwrap();
        assert!((r.dispersion_p * 2.0 * p.sigma - 1.0).abs() < 1e-6);
        assert!((r.inaccuracy_p / p.tau - 1.0).abs() < 1e-6);
    }

    #[test]
    fn numeric_matches_closed_form_on_a_small_grid() {
        let p = EprParams::default();
        let mut g = EprGrid::recommended(&p);
        g.points_per_axis = 128;
        g.x_half_width = 6.0 * p.hbar / (2.0 * p.tau);
        let r = epr_numeric(&p, &g).unwrap();
        let c = epr_closed_form(&p).unwrap();
        assert!(r.max_relative_gap(&c) < 1e-3);
        assert!((r.ungen_lhs - 0.5).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_params() {
        let p = EprParams { sigma: 0.0, ..EprParams::default() };
        assert!(epr_closed_form(&p).is_err());
    }
}

//! Linear estimates from a joint measurement with minimum-uncertainty
//! auxiliary noise, and the choice of squeezing ratio for that noise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PRODUCT_TOL: f64 = 1e-12;
const LOG_RANGE: f64 = 12.0;
const GOLDEN_TOL: f64 = 1e-10;
const REGIME_TOL: f64 = 1e-9;

fn default_hbar() -> f64 {
    1.0
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearEstimateInputs {
    pub mean_x: f64,
    pub var_x: f64,
    pub mean_p: f64,
    pub var_p: f64,
    pub var_xprime: f64,
    pub var_pprime: f64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

impl LinearEstimateInputs {
    pub fn validate(&self) -> Result<()> {
        positive("var_x", self.var_x)?;
        positive("var_p", self.var_p)?;
        positive("var_xprime", self.var_xprime)?;
        positive("var_pprime", self.var_pprime)?;
        positive("hbar", self.hbar)?;
        let want = self.hbar * self.hbar / 4.0;
        let got = self.var_xprime * self.var_pprime;
        if (got - want).abs() > PRODUCT_TOL * want.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "auxiliary variances multiply to {got}, expected hbar^2/4 = {want}"
            )));
        }
        Ok(())
    }
}

/// Best linear estimate `lambda m + (1 - lambda) mean` of one quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearQuadrature {
    pub prior_mean: f64,
    pub signal: f64,
    pub noise: f64,
    pub lambda: f64,
    pub inaccuracy: f64,
    pub dispersion: f64,
    /// Inaccuracy `sqrt(N)` of the raw result used as its own estimate.
    pub raw_inaccuracy: f64,
    /// Dispersion `sqrt(S + N)` of the raw result.
    pub raw_dispersion: f64,
}

impl LinearQuadrature {
    pub fn new(prior_mean: f64, signal: f64, noise: f64) -> Self {
        let total = signal + noise;
        let lambda = signal / total;
        Self {
            prior_mean,
            signal,
            noise,
            lambda,
            inaccuracy: (signal * noise / total).sqrt(),
            dispersion: signal / total.sqrt(),
            raw_inaccuracy: noise.sqrt(),
            raw_dispersion: total.sqrt(),
        }
    }

    pub fn estimate(&self, result: f64) -> f64 {
        self.lambda * result + (1.0 - self.lambda) * self.prior_mean
    }

    /// `(1 + N/S)^{-1}` times the raw dispersion, which must equal the
    /// dispersion of the linear estimate.
    pub fn shrunk_raw_dispersion(&self) -> f64 {
        self.raw_dispersion / (1.0 + self.noise / self.signal)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearReport {
    pub x: LinearQuadrature,
    pub p: LinearQuadrature,
    /// `Delta X eps(P) + eps(X) Delta P + eps(X) eps(P)` for the linear estimates.
    pub joint: f64,
    pub dispersion_product: f64,
}

pub fn linear_estimate(inputs: &LinearEstimateInputs) -> Result<LinearReport> {
    inputs.validate()?;
    let x = LinearQuadrature::new(inputs.mean_x, inputs.var_x, inputs.var_xprime);
    let p = LinearQuadrature::new(inputs.mean_p, inputs.var_p, inputs.var_pprime);
    Ok(LinearReport {
        x,
        p,
        joint: joint(&x, &p),
        dispersion_product: x.dispersion * p.dispersion,
    })
}

fn joint(x: &LinearQuadrature, p: &LinearQuadrature) -> f64 {
    x.dispersion * p.inaccuracy + x.inaccuracy * p.dispersion + x.inaccuracy * p.inaccuracy
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezingInputs {
    #[serde(default)]
    pub mean_x: f64,
    pub var_x: f64,
    #[serde(default)]
    pub mean_p: f64,
    pub var_p: f64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

impl SqueezingInputs {
    /// Prior with `Delta X Delta P = product * hbar` and `Delta X = Delta P`.
    pub fn symmetric(product_over_hbar: f64, hbar: f64) -> Self {
        let var = product_over_hbar * hbar;
        Self {
            mean_x: 0.0,
            var_x: var,
            mean_p: 0.0,
            var_p: var,
            hbar,
        }
    }

    pub fn uncertainty_product(&self) -> f64 {
        (self.var_x * self.var_p).sqrt()
    }

    /// Auxiliary variances for squeezing ratio `r = Delta X' / Delta P'`.
    pub fn auxiliary(&self, ratio: f64) -> LinearEstimateInputs {
        LinearEstimateInputs {
            mean_x: self.mean_x,
            var_x: self.var_x,
            mean_p: self.mean_p,
            var_p: self.var_p,
            var_xprime: self.hbar * ratio / 2.0,
            var_pprime: self.hbar / (2.0 * ratio),
            hbar: self.hbar,
        }
    }

    fn natural_log_ratio(&self) -> f64 {
        0.5 * (self.var_x / self.var_p).ln()
    }

    /// `J` at `ln r = ln(Delta X / Delta P) + u`.
    pub fn joint_at(&self, u: f64) -> f64 {
        let ratio = (self.natural_log_ratio() + u).exp();
        let aux = self.auxiliary(ratio);
        let x = LinearQuadrature::new(aux.mean_x, aux.var_x, aux.var_xprime);
        let p = LinearQuadrature::new(aux.mean_p, aux.var_p, aux.var_pprime);
        joint(&x, &p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SqueezingRegime {
    /// Optimum at `Delta X' / Delta P' = Delta X / Delta P`.
    Interior,
    /// Optimum with one auxiliary variance driven to zero.
    Endpoint,
    /// Both candidates agree within tolerance.
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezingCandidate {
    /// Offset of `ln r` from `ln(Delta X / Delta P)`; `None` at an endpoint.
    pub log_offset: Option<f64>,
    /// `None` at an endpoint.
    pub ratio: Option<f64>,
    pub joint: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezingReport {
    pub uncertainty_product: f64,
    pub hbar: f64,
    pub natural_ratio: f64,
    /// The candidate `r = Delta X / Delta P`.
    pub interior: SqueezingCandidate,
    /// Limit of `J` as either auxiliary variance vanishes, `Delta X Delta P`.
    pub endpoint: SqueezingCandidate,
    /// Golden-section minimum over the bounded log range.
    pub golden: SqueezingCandidate,
    pub best: SqueezingCandidate,
    /// Regime found by comparing `J` across all candidates.
    pub regime: SqueezingRegime,
    /// Regime predicted by the threshold rule `Delta X Delta P <= 2 hbar`.
    pub rule_regime: SqueezingRegime,
    /// `Delta X_lin Delta P_lin` at the interior candidate.
    pub interior_dispersion_product: f64,
}

impl SqueezingReport {
    pub fn regimes_agree(&self) -> bool {
        self.regime == self.rule_regime || self.regime == SqueezingRegime::Boundary
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

pub fn optimize_squeezing(inputs: &SqueezingInputs) -> Result<SqueezingReport> {
    positive("var_x", inputs.var_x)?;
    positive("var_p", inputs.var_p)?;
    positive("hbar", inputs.hbar)?;
    let product = inputs.uncertainty_product();
    let natural = inputs.natural_log_ratio();
    let candidate = |u: f64, joint: f64| SqueezingCandidate {
        log_offset: Some(u),
        ratio: Some((natural + u).exp()),
        joint,
    };

    let interior = candidate(0.0, inputs.joint_at(0.0));
    let endpoint = SqueezingCandidate {
        log_offset: None,
        ratio: None,
        joint: product,
    };
    let (u, j) = golden_section(|u| inputs.joint_at(u), -LOG_RANGE, LOG_RANGE, GOLDEN_TOL);
    let golden = candidate(u, j);

    let scale = product.max(f64::MIN_POSITIVE);
    let finite_best = if interior.joint <= golden.joint { interior } else { golden };
    let regime = if (finite_best.joint - endpoint.joint).abs() <= REGIME_TOL * scale {
        SqueezingRegime::Boundary
    } else if finite_best.joint < endpoint.joint && finite_best.log_offset.map_or(false, |u| u.abs() < LOG_RANGE - 1e-3) {
        SqueezingRegime::Interior
    } else {
        SqueezingRegime::Endpoint
    };
    let best = match regime {
        SqueezingRegime::Endpoint => endpoint,
        _ => finite_best,
    };
    let rule_regime = if product <= 2.0 * inputs.hbar {
        SqueezingRegime::Interior
    } else {
        SqueezingRegime::Endpoint
    };
    let lin = linear_estimate(&inputs.auxiliary(natural.exp()))?;
    Ok(SqueezingReport {
        uncertainty_product: product,
        hbar: inputs.hbar,
        natural_ratio: natural.exp(),
        interior,
        endpoint,
        golden,
        best,
        regime,
        rule_regime,
        interior_dispersion_product: lin.dispersion_product,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(var_x: f64, var_p: f64, var_xprime: f64) -> LinearEstimateInputs {
        LinearEstimateInputs {
            mean_x: 0.3,
            var_x,
            mean_p: -1.0,
            var_p,
            var_xprime,
            var_pprime: 0.25 / var_xprime,
            hbar: 1.0,
        }
    }

    #[test]
    fn equal_signal_and_noise() {
        let r = linear_estimate(&inputs(0.5, 2.0, 0.5)).unwrap();
        assert!((r.x.lambda - 0.5).abs() < 1e-15);
        assert!((r.x.inaccuracy.powi(2) - 0.25).abs() < 1e-15);
        assert!(r.x.inaccuracy < r.x.raw_inaccuracy);
        assert!((r.x.shrunk_raw_dispersion() - r.x.dispersion).abs() < 1e-15);
    }

    #[test]
    fn noise_limits() {
        let r = linear_estimate(&inputs(1.0, 1.0, 1e-9)).unwrap();
        assert!((r.x.lambda - 1.0).abs() < 1e-8 && r.x.inaccuracy < 1e-4);
        assert!(r.p.lambda < 1e-8 && r.p.dispersion < 1e-4);
        assert!((r.p.estimate(7.0) - (-1.0)).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_minimum_uncertainty_noise() {
        let mut i = inputs(1.0, 1.0, 0.5);
        i.var_pprime = 1.0;
        assert!(linear_estimate(&i).is_err());
    }

    #[test]
    fn interior_joint_matches_closed_form() {
        for k in [0.5, 1.0, 1.9, 2.5, 3.0] {
            let s = SqueezingInputs::symmetric(k, 1.0);
            let c: f64 = 1.0 / (2.0 * k);
            let want = k * (2.0 * c.sqrt() + c) / (1.0 + c);
            assert!((s.joint_at(0.0) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn joint_tends_to_prior_product_at_both_ends() {
        let s = SqueezingInputs { mean_x: 0.0, var_x: 2.0, mean_p: 0.0, var_p: 0.7, hbar: 1.0 };
        let product = s.uncertainty_product();
        assert!((s.joint_at(40.0) - product).abs() < 1e-6);
        assert!((s.joint_at(-40.0) - product).abs() < 1e-6);
    }

    #[test]
    fn large_prior_product_prefers_natural_ratio() {
        let s = SqueezingInputs { mean_x: 0.0, var_x: 9.0, mean_p: 0.0, var_p: 1.0, hbar: 1.0 };
        let r = optimize_squeezing(&s).unwrap();
        assert_eq!(r.regime, SqueezingRegime::Interior);
        assert!((r.golden.ratio.unwrap() / r.natural_ratio - 1.0).abs() < 1e-6);
        assert!((r.natural_ratio - 3.0).abs() < 1e-12);
    }

    #[test]
    fn small_prior_product_goes_to_endpoint() {
        let r = optimize_squeezing(&SqueezingInputs::symmetric(1.0, 1.0)).unwrap();
        assert_eq!(r.regime, SqueezingRegime::Endpoint);
        assert!(r.interior.joint > r.endpoint.joint);
    }

    #[test]
    fn threshold_is_a_tie() {
        let r = optimize_squeezing(&SqueezingInputs::symmetric(2.0, 1.0)).unwrap();
        assert!((r.interior.joint - r.endpoint.joint).abs() < 1e-12);
        assert_eq!(r.regime, SqueezingRegime::Boundary);
    }

    #[test]
    fn minimum_uncertainty_prior_halves_dispersion_product() {
        for hbar in [0.5, 1.0, 3.0] {
            let r = optimize_squeezing(&SqueezingInputs::symmetric(0.5, hbar)).unwrap();
            assert!((r.interior_dispersion_product - hbar / 4.0).abs() < 1e-12 * hbar);
        }
    }
}

//! Energy estimates for a system in thermal equilibrium.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{optimal_estimate, probabilities, Estimator};
use crate::fock::annihilation;
use crate::operator::{spectral_apply, DensityOperator, HermitianOperator};
use crate::pom::{projective_pom, Pom};

/// Largest `beta * (E_max - E_min)` accepted before exponentiation.
pub const MAX_EXPONENT: f64 = 700.0;

#[derive(Clone, Debug)]
pub struct ThermalEstimate {
    pub estimator: Estimator,
    /// `-d/d beta ln tr[exp(-beta H) M_k]` by central difference.
    pub log_derivative: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl ThermalEstimate {
    /// Largest gap between the two computations over outcomes whose
    /// probability is at least `rel` times the largest one.
    pub fn max_gap(&self, rel: f64) -> f64 {
        let peak = self.probabilities.iter().copied().fold(0.0, f64::max);
        self.estimator
            .values()
            .iter()
            .zip(&self.log_derivative)
            .zip(&self.probabilities)
            .filter(|(_, &p)| p >= rel * peak)
            .map(|((f, g), _)| (f - g).abs())
            .fold(0.0, f64::max)
    }
}

fn gibbs_unnormalized(h: &HermitianOperator, beta: f64, ground: f64) -> HermitianOperator {
    spectral_apply(h, |e| (-beta * (e - ground)).exp())
}

/// Optimal energy estimate for the Gibbs state `exp(-beta H)/Z`.
pub fn thermal_energy_estimate(h: &HermitianOperator, pom: &Arc<Pom>, beta: f64) -> Result<ThermalEstimate> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let spec = h.eigen();
    let (lo, hi) = (spec.min(), spec.max());
    let exponent = beta * (hi - lo);
    if exponent > MAX_EXPONENT {
        return Err(Error::Overflow {
            exponent,
            limit: MAX_EXPONENT,
        });
    }
    let weight = |b: f64| spec.apply_real(|e| (-b * (e - lo)).exp());
    let rho = DensityOperator::from_unnormalized(weight(beta).into_matrix())?;
    let estimator = optimal_estimate(h, pom, &rho)?;
    let probabilities = probabilities(pom, &rho)?;

    let step = 1e-5 * beta;
    let plus = gibbs_unnormalized(h, beta + step, lo);
    let minus = gibbs_unnormalized(h, beta - step, lo);
    let log_derivative = pom
        .outcomes()
        .iter()
        .map(|o| {
            let zp = o.operator.trace_with(plus.matrix()).re;
            let zm = o.operator.trace_with(minus.matrix()).re;
            if zp > 0.0 && zm > 0.0 {
                lo - (zp.ln() - zm.ln()) / (2.0 * step)
            } else {
                0.0
            }
        })
        .collect();
    Ok(ThermalEstimate {
        estimator,
        log_derivative,
        probabilities,
    })
}

/// One-dimensional harmonic oscillator in a truncated number basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Oscillator {
    pub mass: f64,
    pub omega: f64,
    pub hbar: f64,
}

impl Default for Oscillator {
    fn default() -> Self {
        Self {
            mass: 1.0,
            omega: 1.0,
            hbar: 1.0,
        }
    }
}

impl Oscillator {
    pub fn quantum(&self) -> f64 {
        self.hbar * self.omega
    }

    /// Levels kept at inverse temperature `beta`: enough that the top level
    /// carries Boltzmann weight below `1e-20` relative to the ground state,
    /// capped so that the exponent stays below [`MAX_EXPONENT`].
    pub fn truncation(&self, beta: f64) -> usize {
        let x = beta * self.quantum();
        let wanted = ((1e20_f64).ln() / x).ceil() as usize + 1;
        let cap = (MAX_EXPONENT / x).floor() as usize;
        wanted.max(8).min(cap.max(2))
    }

    pub fn hamiltonian(&self, dim: usize) -> HermitianOperator {
        let levels: Vec<f64> = (0..dim).map(|n| self.quantum() * (n as f64 + 0.5)).collect();
        HermitianOperator::from_real_diagonal(&levels)
    }

    pub fn position(&self, dim: usize) -> HermitianOperator {
        let a = annihilation(dim);
        let scale = (self.hbar / (2.0 * self.mass * self.omega)).sqrt();
        HermitianOperator::new((&a + a.adjoint()).scale(scale)).expect("a + a^dagger is Hermitian")
    }

    /// Eigenprojectors of the truncated position operator, valued at the
    /// eigenvalues (the Gauss-Hermite nodes).
    pub fn position_pom(&self, dim: usize) -> Pom {
        projective_pom(&self.position(dim)).with_id("position")
    }

    /// `A_T + B_T x^2` with `A_T = (1/2) hbar omega coth(beta hbar omega)`
    /// and `B_T = (1/2) m omega^2 sech^2(beta hbar omega / 2)`.
    pub fn quadratic_estimate(&self, beta: f64, x: f64) -> f64 {
        let q = beta * self.quantum();
        let a_t = 0.5 * self.quantum() / q.tanh();
        let b_t = 0.5 * self.mass * self.omega.powi(2) / (q / 2.0).cosh().powi(2);
        a_t + b_t * x * x
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatorThermalReport {
    pub beta: f64,
    pub dim: usize,
    /// Nodes with probability at least `1e-6` of the most likely one.
    pub nodes_compared: usize,
    /// Largest `|estimate - (A_T + B_T x^2)|` over compared nodes.
    pub closed_form_gap: f64,
    /// Largest gap between the estimate and the log-derivative form.
    pub log_derivative_gap: f64,
    /// Largest `|estimate - hbar omega / 2|` over compared nodes.
    pub ground_energy_gap: f64,
}

pub const SIGNIFICANT_PROBABILITY: f64 = 1e-6;

/// Position measurement on a thermal oscillator compared with the quadratic
/// closed form.
pub fn oscillator_thermal(osc: &Oscillator, beta: f64) -> Result<OscillatorThermalReport> {
    let dim = osc.truncation(beta);
    let pom = Arc::new(osc.position_pom(dim));
    let est = thermal_energy_estimate(&osc.hamiltonian(dim), &pom, beta)?;
    let peak = est.probabilities.iter().copied().fold(0.0, f64::max);
    let mut nodes_compared = 0;
    let mut closed_form_gap = 0.0_f64;
    let mut ground_energy_gap = 0.0_f64;
    for (k, o) in pom.outcomes().iter().enumerate() {
        if est.probabilities[k] < SIGNIFICANT_PROBABILITY * peak {
            continue;
        }
        let x = o.value.as_scalar().expect("position POM has scalar values");
        let f = est.estimator.values()[k];
        nodes_compared += 1;
        closed_form_gap = closed_form_gap.max((f - osc.quadratic_estimate(beta, x)).abs());
        ground_energy_gap = ground_energy_gap.max((f - 0.5 * osc.quantum()).abs());
    }
    Ok(OscillatorThermalReport {
        beta,
        dim,
        nodes_compared,
        closed_form_gap,
        log_derivative_gap: est.max_gap(SIGNIFICANT_PROBABILITY),
        ground_energy_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn own_projectors_return_eigenvalues() {
        let h = HermitianOperator::from_real_diagonal(&[0.5, 1.5, 2.5, 3.5]);
        let pom = Arc::new(projective_pom(&h));
        let est = thermal_energy_estimate(&h, &pom, 1.3).unwrap();
        for (o, f) in pom.outcomes().iter().zip(est.estimator.values()) {
            assert!((o.value.as_scalar().unwrap() - f).abs() < 1e-12);
        }
        assert!(est.max_gap(0.0) < 1e-7);
    }

    #[test]
    fn quadratic_form_at_unit_beta() {
        let r = oscillator_thermal(&Oscillator::default(), 1.0).unwrap();
        assert!(r.closed_form_gap < 1e-6, "{r:?}");
        assert!(r.log_derivative_gap < 1e-6, "{r:?}");
        assert!(r.nodes_compared > 10);
    }

    #[test]
    fn zero_temperature_limit() {
        let osc = Oscillator {
            mass: 2.0,
            omega: 0.7,
            hbar: 1.0,
        };
        let r = oscillator_thermal(&osc, 50.0 / osc.quantum()).unwrap();
        assert!(r.ground_energy_gap < 1e-8, "{r:?}");
    }

    #[test]
    fn overflow_is_reported() {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1000.0]);
        let pom = Arc::new(projective_pom(&h));
        assert!(matches!(thermal_energy_estimate(&h, &pom, 1.0), Err(Error::Overflow { .. })));
    }

    #[test]
    fn truncation_rule() {
        let osc = Oscillator::default();
        assert_eq!(osc.truncation(1.0), 48);
        assert_eq!(osc.truncation(50.0), 8);
        assert!(osc.truncation(200.0) <= 3);
    }
}

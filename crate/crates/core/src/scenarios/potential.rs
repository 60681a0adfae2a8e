//! Energy estimate from a position measurement on a known pure state.
//!
//! For `psi = R exp(i S / hbar)` the estimate at `x` is
//! `|S'|^2 / 2m + V(x) + Q(x)` with the quantum potential
//! `Q = -hbar^2 R'' / (2 m R)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::optimal_estimate;
use crate::operator::{CMatrix, DensityOperator, HermitianOperator, Ket, C64};
use crate::pom::basis_pom;

/// Amplitudes below this magnitude are treated as nodes.
pub const NODE_THRESHOLD: f64 = 1e-12;

/// Wavefunction sampled on a uniform one-dimensional grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridWavefunction {
    pub x0: f64,
    pub spacing: f64,
    pub amplitudes: Vec<C64>,
    pub hbar: f64,
    pub mass: f64,
}

impl GridWavefunction {
    /// Samples `f` at `n` points spanning `[x_min, x_max]` and normalises so
    /// that `sum |psi|^2 h = 1`.
    pub fn sample(x_min: f64, x_max: f64, n: usize, hbar: f64, mass: f64, f: impl Fn(f64) -> C64) -> Result<Self> {
        if n < 5 || !(x_max > x_min) {
            return Err(Error::InvalidParameter("grid needs x_max > x_min and at least 5 points".into()));
        }
        let spacing = (x_max - x_min) / (n - 1) as f64;
        let mut amplitudes: Vec<C64> = (0..n).map(|i| f(x_min + i as f64 * spacing)).collect();
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * spacing;
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter("wavefunction has zero norm on the grid".into()));
        }
        let scale = norm.sqrt().recip();
        for z in &mut amplitudes {
            *z *= scale;
        }
        Ok(Self {
            x0: x_min,
            spacing,
            amplitudes,
            hbar,
            mass,
        })
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.spacing
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.spacing
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialEstimate {
    /// Estimate per grid point; `None` at the two end points and at nodes.
    pub energy: Vec<Option<f64>>,
    pub kinetic: Vec<Option<f64>>,
    pub quantum_potential: Vec<Option<f64>>,
    pub nodes: Vec<usize>,
    /// `Re <x|H|psi> / <x|psi>` for the finite-difference Hamiltonian with
    /// position projectors, i.e. the optimal estimate computed directly.
    pub direct: Vec<f64>,
    /// Largest `|energy - direct|` over evaluated points whose probability
    /// is resolvable by the direct estimate.
    pub max_direct_gap: f64,
}

/// Evaluates the phase/amplitude form by central differences and compares
/// it with the optimal estimate of the three-point Hamiltonian.
pub fn quantum_potential_estimate(psi: &GridWavefunction, potential: &[f64]) -> Result<PotentialEstimate> {
    let n = psi.len();
    if potential.len() != n {
        return Err(Error::DimensionMismatch {
            context: "potential samples",
            expected: n,
            found: potential.len(),
        });
    }
    if (psi.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!("wavefunction norm {} differs from 1", psi.norm())));
    }
    let h = psi.spacing;
    let (hbar, mass) = (psi.hbar, psi.mass);
    let amp = &psi.amplitudes;
    let r: Vec<f64> = amp.iter().map(|z| z.norm()).collect();

    let mut energy = vec![None; n];
    let mut kinetic = vec![None; n];
    let mut quantum = vec![None; n];
    let mut nodes = Vec::new();
    for i in 0..n {
        if r[i] < NODE_THRESHOLD {
            nodes.push(i);
            continue;
        }
        if i == 0 || i + 1 == n {
            continue;
        }
        let dpsi = (amp[i + 1] - amp[i - 1]) / (2.0 * h);
        let s_prime = hbar * (dpsi / amp[i]).im;
        let r_second = (r[i + 1] - 2.0 * r[i] + r[i - 1]) / (h * h);
        let k = s_prime * s_prime / (2.0 * mass);
        let q = -hbar * hbar / (2.0 * mass) * r_second / r[i];
        kinetic[i] = Some(k);
        quantum[i] = Some(q);
        energy[i] = Some(k + potential[i] + q);
    }

    let c = hbar * hbar / (2.0 * mass * h * h);
    let ham = CMatrix::from_fn(n, n, |i, j| {
        let v = if i == j {
            2.0 * c + potential[i]
        } else if i.abs_diff(j) == 1 {
            -c
        } else {
            0.0
        };
        C64::new(v, 0.0)
    });
    let ham = HermitianOperator::new(ham)?;
    let xs: Vec<f64> = (0..n).map(|i| psi.x(i)).collect();
    let pom = Arc::new(basis_pom(&CMatrix::identity(n, n), &xs)?.with_id("position grid"));
    let ket = Ket::from_slice(&amp.iter().map(|z| z * h.sqrt()).collect::<Vec<_>>())?;
    let direct_est = optimal_estimate(&ham, &pom, &DensityOperator::pure(&ket))?;
    let unresolved = direct_est.zero_probability();
    let direct = direct_est.values().to_vec();
    let max_direct_gap = energy
        .iter()
        .zip(&direct)
        .enumerate()
        .filter(|(i, _)| !unresolved.contains(i))
        .filter_map(|(_, (e, d))| e.map(|e| (e - d).abs()))
        .fold(0.0, f64::max);

    Ok(PotentialEstimate {
        energy,
        kinetic,
        quantum_potential: quantum,
        nodes,
        direct,
        max_direct_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ground_state(n: usize) -> (GridWavefunction, Vec<f64>) {
        // m = omega = hbar = 1.
        let psi = GridWavefunction::sample(-6.0, 6.0, n, 1.0, 1.0, |x| C64::new((-x * x / 2.0).exp(), 0.0)).unwrap();
        let v = (0..n).map(|i| 0.5 * psi.x(i).powi(2)).collect();
        (psi, v)
    }

    fn interior_error(n: usize) -> f64 {
        let (psi, v) = ground_state(n);
        let est = quantum_potential_estimate(&psi, &v).unwrap();
        (0..n)
            .filter(|&i| psi.x(i).abs() < 2.5)
            .filter_map(|i| est.energy[i].map(|e| (e - 0.5).abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn ground_state_is_flat() {
        assert!(interior_error(241) < 1e-3);
    }

    #[test]
    fn second_order_convergence() {
        let coarse = interior_error(121);
        let fine = interior_error(241);
        let ratio = coarse / fine;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn plane_wave_kinetic_term() {
        let p0 = 1.5;
        let psi = GridWavefunction::sample(-15.0, 15.0, 401, 1.0, 1.0, |x| {
            C64::from_polar((-x * x / 200.0).exp(), p0 * x)
        })
        .unwrap();
        let v = vec![0.0; psi.len()];
        let est = quantum_potential_estimate(&psi, &v).unwrap();
        let mid = psi.len() / 2;
        let k = est.kinetic[mid].unwrap();
        assert!((k - p0 * p0 / 2.0).abs() < 1e-2, "{k}");
        assert!(est.max_direct_gap < 1e-2);
    }

    #[test]
    fn real_wavefunction_has_no_kinetic_phase_term() {
        let (psi, v) = ground_state(101);
        let est = quantum_potential_estimate(&psi, &v).unwrap();
        for i in 1..100 {
            let k = est.kinetic[i].unwrap();
            assert_eq!(k, 0.0);
            let sum = v[i] + est.quantum_potential[i].unwrap();
            assert!((est.energy[i].unwrap() - sum).abs() < 1e-14);
        }
    }

    #[test]
    fn direct_estimate_agrees() {
        let (psi, v) = ground_state(241);
        let est = quantum_potential_estimate(&psi, &v).unwrap();
        assert!(est.max_direct_gap < 1e-9, "{}", est.max_direct_gap);
    }

    #[test]
    fn nodes_are_flagged() {
        let psi = GridWavefunction::sample(-4.0, 4.0, 81, 1.0, 1.0, |x| C64::new(x * (-x * x / 2.0).exp(), 0.0)).unwrap();
        let v = vec![0.0; 81];
        let est = quantum_potential_estimate(&psi, &v).unwrap();
        assert!(est.nodes.contains(&40));
        assert!(est.energy[40].is_none());
    }
}

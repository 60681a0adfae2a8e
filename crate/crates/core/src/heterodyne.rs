//! Heterodyne detection with a vacuum imageband: optimal quadrature estimates,
//! the Husimi function and its Fisher information.
//!
//! Outcome density on the grid is `Q(alpha) = pi^{-1} <alpha|S rho S|alpha>`
//! with `S = T^{-1/2}` the grid renormaliser, so `p_k = h^2 Q(alpha_k)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{estimate_stats, optimal_estimate, probabilities, Estimator};
use crate::fock::{self, quadrature_x1, quadrature_x2};
use crate::operator::{CMatrix, DensityOperator, C64};
use crate::pom::{CompletionCorrection, GridKind, Pom};
use crate::relations::{CheckTolerance, InputsDigest, RelationId, RelationReport};
use crate::tolerance::Tolerances;

/// Step for the central differences of `Q`.
pub const GRADIENT_STEP: f64 = 1e-4;
/// Limit on the Q-weighted rms gap between the two optimal-estimate formulas.
pub const QEST_LIMIT: f64 = 1e-3;

type Mat2 = [[f64; 2]; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeterodyneAnalysis {
    /// Dispersions of the optimal estimates of `X1`, `X2`.
    pub dispersion: [f64; 2],
    /// Inaccuracies of the optimal estimates.
    pub inaccuracy: [f64; 2],
    /// Dispersions of the joint quadratures, i.e. of the raw outcome `alpha_j`.
    pub joint_dispersion: [f64; 2],
    pub fisher: Mat2,
    /// Fisher information of the marginals `Q_j`.
    pub fisher_marginal: [f64; 2],
    pub cov_q: Mat2,
    pub cov_opt: Mat2,
    /// `max |C^opt - C^Q - F/16 + 1/2|`.
    pub covariance_identity_residual: f64,
    /// Q-weighted rms gap between `alpha_j + (1/4) d_j log Q` and the direct formula.
    pub qest_rms_gap: [f64; 2],
    /// Probability on the boundary ring, excluded from the Fisher sums.
    pub excluded_mass: f64,
    pub cramer_rao_holds: bool,
    pub marginal_bound_holds: bool,
    pub grid_correction: CompletionCorrection,
}

#[derive(Clone, Debug)]
pub struct HeterodyneSuite {
    pub analysis: HeterodyneAnalysis,
    pub reports: Vec<RelationReport>,
    pub estimates: [Estimator; 2],
}

fn coherent_grid(pom: &Pom) -> Result<&crate::pom::GridInfo> {
    match pom.grid() {
        Some(g) if g.kind == GridKind::Coherent => Ok(g),
        _ => Err(Error::InvalidPom(format!("{} is not a coherent-state grid POM", pom.id()))),
    }
}

/// Evaluates the renormalised Husimi function off the grid.
struct Husimi {
    dim: usize,
    sandwiched: CMatrix,
}

impl Husimi {
    fn new(rho: &DensityOperator, renormalizer: &CMatrix) -> Self {
        Self {
            dim: rho.dim(),
            sandwiched: renormalizer * rho.matrix() * renormalizer,
        }
    }

    fn at(&self, alpha: C64) -> f64 {
        let v = fock::coherent_amplitudes(self.dim, alpha);
        v.dotc(&(&self.sandwiched * &v)).re / std::f64::consts::PI
    }

    fn gradient(&self, alpha: C64) -> [f64; 2] {
        let d = GRADIENT_STEP;
        let g1 = (self.at(alpha + C64::new(d, 0.0)) - self.at(alpha - C64::new(d, 0.0))) / (2.0 * d);
        let g2 = (self.at(alpha + C64::new(0.0, d)) - self.at(alpha - C64::new(0.0, d))) / (2.0 * d);
        [g1, g2]
    }
}

fn covariance(weights: &[f64], xs: &[[f64; 2]]) -> Mat2 {
    let total: f64 = weights.iter().sum();
    let mut mean = [0.0; 2];
    for (w, x) in weights.iter().zip(xs) {
        for j in 0..2 {
            mean[j] += w * x[j];
        }
    }
    for m in &mut mean {
        *m /= total;
    }
    let mut c = [[0.0; 2]; 2];
    for (w, x) in weights.iter().zip(xs) {
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] += w * (x[i] - mean[i]) * (x[j] - mean[j]);
            }
        }
    }
    for row in &mut c {
        for v in row {
            *v /= total;
        }
    }
    c
}

/// Runs every heterodyne relation on a coherent-state grid POM.
pub fn heterodyne_suite(rho: &DensityOperator, pom: &Arc<Pom>, tol: &Tolerances) -> Result<HeterodyneSuite> {
    let grid = coherent_grid(pom)?;
    let spec = grid.spec;
    let n = spec.points_per_axis;
    let h = spec.spacing();
    let d = pom.dim();
    let x = [quadrature_x1(d), quadrature_x2(d)];

    let probs = probabilities(pom, rho)?;
    let est = [optimal_estimate(&x[0], pom, rho)?, optimal_estimate(&x[1], pom, rho)?];
    let stats = [estimate_stats(&est[0], &x[0], rho)?, estimate_stats(&est[1], &x[1], rho)?];

    let husimi = Husimi::new(rho, &grid.renormalizer);
    let q_grid: Vec<f64> = probs.iter().map(|p| p / (h * h)).collect();
    let q_max = q_grid.iter().copied().fold(0.0, f64::max);
    let significant = 1e-10 * q_max;

    let mut fisher = [[0.0; 2]; 2];
    let mut excluded_mass = 0.0;
    let mut gap_num = [0.0; 2];
    let mut gap_den = 0.0;
    let mut marginal_density = [vec![0.0; n], vec![0.0; n]];
    let mut marginal_slope = [vec![0.0; n], vec![0.0; n]];
    let points: Vec<[f64; 2]> = (0..n * n)
        .map(|k| {
            let a = spec.point(k / n, k % n);
            [a.re, a.im]
        })
        .collect();

    for i in 0..n {
        for j in 0..n {
            let k = spec.index(i, j);
            let q = q_grid[k];
            let interior = i > 0 && j > 0 && i + 1 < n && j + 1 < n;
            if !interior {
                excluded_mass += probs[k];
                continue;
            }
            let alpha = spec.point(i, j);
            let grad = husimi.gradient(alpha);
            // Marginal densities along each axis for the interior rows/columns.
            marginal_density[0][i] += h * q;
            marginal_density[1][j] += h * q;
            marginal_slope[0][i] += h * grad[0];
            marginal_slope[1][j] += h * grad[1];
            if q <= significant {
                continue;
            }
            for a in 0..2 {
                for b in 0..2 {
                    fisher[a][b] += h * h * grad[a] * grad[b] / q;
                }
            }
            let qest = [points[k][0] + 0.25 * grad[0] / q, points[k][1] + 0.25 * grad[1] / q];
            for c in 0..2 {
                gap_num[c] += q * (qest[c] - est[c].values()[k]).powi(2);
            }
            gap_den += q;
        }
    }
    let qest_rms_gap = [(gap_num[0] / gap_den).sqrt(), (gap_num[1] / gap_den).sqrt()];
    let worst_gap = qest_rms_gap[0].max(qest_rms_gap[1]);
    if !(worst_gap <= QEST_LIMIT) {
        return Err(Error::GridResolution {
            what: "optimal quadrature estimate from the Husimi gradient",
            discrepancy: worst_gap,
        });
    }

    let mut fisher_marginal = [0.0; 2];
    for c in 0..2 {
        let peak = marginal_density[c].iter().copied().fold(0.0, f64::max);
        for (qm, dq) in marginal_density[c].iter().zip(&marginal_slope[c]) {
            if *qm > 1e-10 * peak {
                fisher_marginal[c] += h * dq * dq / qm;
            }
        }
    }

    let cov_q = covariance(&probs, &points);
    let opt_points: Vec<[f64; 2]> = (0..n * n).map(|k| [est[0].values()[k], est[1].values()[k]]).collect();
    let cov_opt = covariance(&probs, &opt_points);
    let mut covariance_identity_residual = 0.0_f64;
    for a in 0..2 {
        for b in 0..2 {
            let delta = if a == b { 0.5 } else { 0.0 };
            let r = cov_opt[a][b] - cov_q[a][b] - fisher[a][b] / 16.0 + delta;
            covariance_identity_residual = covariance_identity_residual.max(r.abs());
        }
    }

    let slack = CheckTolerance::grid(tol).slack;
    let cramer_rao_holds = (0..2).all(|c| fisher_marginal[c] * cov_q[c][c] >= 1.0 - slack);
    let marginal_bound_holds = (0..2).all(|c| fisher[c][c] >= fisher_marginal[c] - slack);

    let analysis = HeterodyneAnalysis {
        dispersion: [stats[0].dispersion, stats[1].dispersion],
        inaccuracy: [stats[0].inaccuracy, stats[1].inaccuracy],
        joint_dispersion: [cov_q[0][0].sqrt(), cov_q[1][1].sqrt()],
        fisher,
        fisher_marginal,
        cov_q,
        cov_opt,
        covariance_identity_residual,
        qest_rms_gap,
        excluded_mass,
        cramer_rao_holds,
        marginal_bound_holds,
        grid_correction: grid.correction,
    };
    let reports = heterodyne_reports(&analysis, pom, rho, tol);
    Ok(HeterodyneSuite {
        analysis,
        reports,
        estimates: est,
    })
}

fn heterodyne_reports(an: &HeterodyneAnalysis, pom: &Pom, rho: &DensityOperator, tol: &Tolerances) -> Vec<RelationReport> {
    let t = CheckTolerance::grid(tol);
    let digest = || InputsDigest::new(pom.dim()).pom(pom).state(rho).estimates("optimal");
    let eps2 = [an.inaccuracy[0].powi(2), an.inaccuracy[1].powi(2)];
    let trace_f = an.fisher[0][0] + an.fisher[1][1];
    vec![
        RelationReport::inequality(RelationId::Unbest, an.dispersion[0] * an.dispersion[1], 0.125, t, digest()),
        RelationReport::inequality(RelationId::Accbest, eps2[0] + eps2[1], 0.25, t, digest()),
        RelationReport::inequality(RelationId::Fishbound, eps2[0], an.fisher[1][1] / 16.0, t, digest())
            .with_detail("quadrature", 1.0),
        RelationReport::inequality(RelationId::Fishbound, eps2[1], an.fisher[0][0] / 16.0, t, digest())
            .with_detail("quadrature", 2.0),
        RelationReport::inequality(RelationId::Tracefish, 4.0, trace_f, t, digest())
            .with_detail("excluded_mass", an.excluded_mass),
        RelationReport::identity(RelationId::FisherIdentity, eps2[0] + eps2[1], 0.5 - trace_f / 16.0, t, digest())
            .with_detail("covariance_identity_residual", an.covariance_identity_residual)
            .with_detail("cramer_rao_holds", f64::from(u8::from(an.cramer_rao_holds)))
            .with_detail("marginal_bound_holds", f64::from(u8::from(an.marginal_bound_holds))),
    ]
}

/// Which estimates enter the canonical product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMode {
    Optimal,
    /// The raw outcome `alpha_j`, i.e. the joint-quadrature estimate.
    NoInfo,
}

/// Product of dispersions for the canonical joint measurement, obtained from
/// heterodyne detection by the substitution `X = sqrt(2 hbar) X1`,
/// `P = sqrt(2 hbar) X2`. The default `hbar = 1/2` leaves quadrature units
/// unchanged.
///
/// `lhs` is the product, `rhs = hbar/4`; the ratio to the universally
/// unbiased level `hbar` is in the details.
pub fn check_uncanon(
    rho: &DensityOperator,
    pom: &Arc<Pom>,
    mode: EstimateMode,
    hbar: Option<f64>,
    tol: &Tolerances,
) -> Result<RelationReport> {
    coherent_grid(pom)?;
    let hbar = hbar.unwrap_or(0.5);
    if !(hbar > 0.0) {
        return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
    }
    let d = pom.dim();
    let x = [quadrature_x1(d), quadrature_x2(d)];
    let mut spread = [0.0; 2];
    for c in 0..2 {
        let est = match mode {
            EstimateMode::Optimal => optimal_estimate(&x[c], pom, rho)?,
            EstimateMode::NoInfo => Estimator::from_outcome_values(pom.clone(), c)?,
        };
        spread[c] = estimate_stats(&est, &x[c], rho)?.dispersion;
    }
    let product = 2.0 * hbar * spread[0] * spread[1];
    let label = match mode {
        EstimateMode::Optimal => "optimal",
        EstimateMode::NoInfo => "joint quadrature",
    };
    Ok(RelationReport::inequality(
        RelationId::Uncanon,
        product,
        hbar / 4.0,
        CheckTolerance::grid(tol),
        InputsDigest::new(d).pom(pom).state(rho).estimates(label),
    )
    .with_detail("hbar", hbar)
    .with_detail("ratio_to_unbiased_bound", product / hbar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, number_state};
    use crate::pom::{coherent_pom, GridSpec};

    fn grid_pom(beta: C64) -> Arc<Pom> {
        let spec = GridSpec::centered(beta, beta.norm() + 6.0, 61);
        Arc::new(coherent_pom(30, spec).unwrap())
    }

    #[test]
    fn coherent_state_estimates_halve_the_offset() {
        let beta = C64::new(0.7, -0.4);
        let pom = grid_pom(beta);
        let rho = DensityOperator::pure(&coherent_state(30, beta));
        let suite = heterodyne_suite(&rho, &pom, &Tolerances::default()).unwrap();
        let spec = pom.grid().unwrap().spec;
        let k = spec.index(33, 27);
        let alpha = spec.point(33, 27);
        let want = (alpha + beta) / 2.0;
        assert!((suite.estimates[0].values()[k] - want.re).abs() < 1e-4);
        assert!((suite.estimates[1].values()[k] - want.im).abs() < 1e-4);
        let product = suite.analysis.dispersion[0] * suite.analysis.dispersion[1];
        assert!((product - 0.125).abs() < 1e-3);
        assert!(suite.reports.iter().all(|r| r.passed), "{:#?}", suite.reports);
    }

    #[test]
    fn number_state_estimate() {
        let pom = grid_pom(C64::new(0.0, 0.0));
        let n = 2;
        let rho = DensityOperator::pure(&number_state(30, n));
        let suite = heterodyne_suite(&rho, &pom, &Tolerances::default()).unwrap();
        let spec = pom.grid().unwrap().spec;
        for (i, j) in [(35, 30), (26, 38), (40, 22)] {
            let alpha = spec.point(i, j);
            let want = alpha * 0.5 * (1.0 + n as f64 / alpha.norm_sqr());
            let k = spec.index(i, j);
            assert!((suite.estimates[0].values()[k] - want.re).abs() < 1e-4);
            assert!((suite.estimates[1].values()[k] - want.im).abs() < 1e-4);
        }
        let a = &suite.analysis;
        assert!((a.inaccuracy[0].powi(2) + a.inaccuracy[1].powi(2) - 0.25).abs() < 1e-3);
        assert!(a.cramer_rao_holds && a.marginal_bound_holds);
        assert!(a.covariance_identity_residual < 1e-3);
    }

    #[test]
    fn canonical_products() {
        let pom = grid_pom(C64::new(0.0, 0.0));
        let vac = fock::vacuum(30);
        let opt = check_uncanon(&vac, &pom, EstimateMode::Optimal, None, &Tolerances::default()).unwrap();
        assert!((opt.details["ratio_to_unbiased_bound"] - 0.25).abs() < 1e-3 && opt.saturated);
        let raw = check_uncanon(&vac, &pom, EstimateMode::NoInfo, Some(1.0), &Tolerances::default()).unwrap();
        assert!((raw.lhs - 1.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_non_grid_pom() {
        let pom = Arc::new(crate::pom::trine_pom());
        let rho = DensityOperator::maximally_mixed(2);
        assert!(heterodyne_suite(&rho, &pom, &Tolerances::default()).is_err());
    }
}

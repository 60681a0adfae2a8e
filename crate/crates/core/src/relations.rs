//! Numerical checks of the uncertainty relations satisfied by estimates.
//!
//! Every check returns a [`RelationReport`]. Inequalities are oriented so that
//! they read `lhs >= rhs`; identities read `lhs == rhs`. In both cases
//! `slack = lhs - rhs`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{self, bias_residual, estimate_stats, moments, optimal_estimate, Estimator};
use crate::operator::{trace_product, DensityOperator, HermitianOperator};
use crate::pom::Pom;
use crate::tolerance::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationId {
    Varsum,
    Geom,
    Accbound,
    Ungen,
    Uni,
    Unbest,
    Accbest,
    Fishbound,
    Tracefish,
    Uncanon,
    FisherIdentity,
}

impl RelationId {
    pub fn as_str(&self) -> &'static str {
        match self {
            RelationId::Varsum => "varsum",
            RelationId::Geom => "geom",
            RelationId::Accbound => "accbound",
            RelationId::Ungen => "ungen",
            RelationId::Uni => "uni",
            RelationId::Unbest => "unbest",
            RelationId::Accbest => "accbest",
            RelationId::Fishbound => "fishbound",
            RelationId::Tracefish => "tracefish",
            RelationId::Uncanon => "uncanon",
            RelationId::FisherIdentity => "fisher_identity",
        }
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `lhs >= rhs`.
    AtLeast,
    /// `lhs == rhs`.
    Equal,
}

/// Tolerances for one class of check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckTolerance {
    pub slack: f64,
    pub saturation: f64,
}

impl CheckTolerance {
    /// Exact finite-dimensional linear algebra.
    pub fn exact(tol: &Tolerances) -> Self {
        Self {
            slack: tol.slack,
            saturation: tol.saturation,
        }
    }

    /// Phase-space quadrature on a grid.
    pub fn grid(tol: &Tolerances) -> Self {
        Self {
            slack: tol.slack_grid,
            saturation: tol.saturation_grid,
        }
    }
}

/// Provenance of a check's inputs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InputsDigest {
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pom_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_purity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimates: Option<String>,
}

impl InputsDigest {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    pub fn pom(mut self, pom: &Pom) -> Self {
        self.pom_id = Some(pom.id().to_string());
        self.outcomes = Some(pom.len());
        self
    }

    pub fn state(mut self, rho: &DensityOperator) -> Self {
        self.state_purity = Some(rho.purity());
        self
    }

    pub fn estimates(mut self, what: impl Into<String>) -> Self {
        self.estimates = Some(what.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub relation_id: RelationId,
    pub comparison: Comparison,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub saturated: bool,
    pub passed: bool,
    pub tolerance: f64,
    pub inputs: InputsDigest,
    /// Intermediate quantities, keyed by name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

impl RelationReport {
    pub fn inequality(id: RelationId, lhs: f64, rhs: f64, tol: CheckTolerance, inputs: InputsDigest) -> Self {
        let slack = lhs - rhs;
        Self {
            relation_id: id,
            comparison: Comparison::AtLeast,
            lhs,
            rhs,
            slack,
            saturated: slack.abs() < tol.saturation,
            passed: slack >= -tol.slack,
            tolerance: tol.slack,
            inputs,
            details: BTreeMap::new(),
        }
    }

    pub fn identity(id: RelationId, lhs: f64, rhs: f64, tol: CheckTolerance, inputs: InputsDigest) -> Self {
        let slack = lhs - rhs;
        Self {
            relation_id: id,
            comparison: Comparison::Equal,
            lhs,
            rhs,
            slack,
            saturated: slack.abs() < tol.saturation,
            passed: slack.abs() <= tol.slack,
            tolerance: tol.slack,
            inputs,
            details: BTreeMap::new(),
        }
    }

    pub fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }
}

/// `|<[A, B]>| / 2`, taking the imaginary part of `tr[rho (AB - BA)]`.
pub fn commutator_bound(a: &HermitianOperator, b: &HermitianOperator, rho: &DensityOperator) -> f64 {
    trace_product(rho.matrix(), &a.commutator(b)).im.abs() / 2.0
}

fn same_dims(a: &HermitianOperator, pom: &Pom, rho: &DensityOperator) -> Result<()> {
    for (context, found) in [("observable vs POM", a.dim()), ("state vs POM", rho.dim())] {
        if found != pom.dim() {
            return Err(Error::DimensionMismatch {
                context,
                expected: pom.dim(),
                found,
            });
        }
    }
    Ok(())
}

/// `Var A = (dispersion of the optimal estimate)^2 + (its inaccuracy)^2`.
pub fn check_varsum(a: &HermitianOperator, pom: &Arc<Pom>, rho: &DensityOperator, tol: &Tolerances) -> Result<RelationReport> {
    same_dims(a, pom, rho)?;
    let est = optimal_estimate(a, pom, rho)?;
    let st = estimate_stats(&est, a, rho)?;
    let var = a.variance(rho);
    let scale = var.abs().max(1.0);
    let tol = CheckTolerance {
        slack: tol.slack.max(1e-10 * scale),
        saturation: tol.saturation,
    };
    Ok(RelationReport::identity(
        RelationId::Varsum,
        var,
        st.dispersion.powi(2) + st.inaccuracy.powi(2),
        tol,
        InputsDigest::new(pom.dim()).pom(pom).state(rho).estimates("optimal"),
    )
    .with_detail("dispersion", st.dispersion)
    .with_detail("inaccuracy", st.inaccuracy))
}

/// Product of the lengths `sqrt(Delta^2 + eps^2)` of two optimal estimates
/// against `|<[A, B]>|/2`.
pub fn check_geom(
    a: &HermitianOperator,
    b: &HermitianOperator,
    pom: &Arc<Pom>,
    rho: &DensityOperator,
    tol: &Tolerances,
) -> Result<RelationReport> {
    same_dims(a, pom, rho)?;
    same_dims(b, pom, rho)?;
    let sa = estimate_stats(&optimal_estimate(a, pom, rho)?, a, rho)?;
    let sb = estimate_stats(&optimal_estimate(b, pom, rho)?, b, rho)?;
    let lhs = sa.dispersion.hypot(sa.inaccuracy) * sb.dispersion.hypot(sb.inaccuracy);
    let product = (a.variance(rho).max(0.0) * b.variance(rho).max(0.0)).sqrt();
    Ok(RelationReport::inequality(
        RelationId::Geom,
        lhs,
        commutator_bound(a, b, rho),
        CheckTolerance::exact(tol),
        InputsDigest::new(pom.dim()).pom(pom).state(rho).estimates("optimal"),
    )
    .with_detail("delta_a_delta_b", product)
    .with_detail("varsum_residual", lhs - product))
}

/// Inaccuracy of the optimal estimate against
/// `sum_k w_k |tr[rho (A M_k - M_k A)]|^2 / (4 tr[rho M_k])`.
pub fn check_accbound(a: &HermitianOperator, pom: &Arc<Pom>, rho: &DensityOperator, tol: &Tolerances) -> Result<RelationReport> {
    same_dims(a, pom, rho)?;
    let est = optimal_estimate(a, pom, rho)?;
    let eps2 = estimation::statistical_deviation_sq(a, &est, rho)?;
    let rho_a = rho.matrix() * a.matrix();
    let mut rhs = 0.0;
    for (o, m) in pom.outcomes().iter().zip(moments(a, pom, rho)?) {
        if m.p < estimation::ZERO_PROBABILITY {
            continue;
        }
        // tr[rho (A M - M A)] = 2i Im tr[rho A M]
        let im = o.operator.trace_with(&rho_a).im;
        rhs += o.weight * im * im / m.p;
    }
    Ok(RelationReport::inequality(
        RelationId::Accbound,
        eps2,
        rhs,
        CheckTolerance::exact(tol),
        InputsDigest::new(pom.dim()).pom(pom).state(rho).estimates("optimal"),
    ))
}

fn same_pom(x: &Estimator, y: &Estimator) -> Result<()> {
    if Arc::ptr_eq(x.pom(), y.pom()) || **x.pom() == **y.pom() {
        Ok(())
    } else {
        Err(Error::PomMismatch)
    }
}

/// `Delta_f eps_B + eps_A Delta_g + eps_A eps_B >= |<[A, B]>|/2` for any two
/// estimates drawn from one measurement.
pub fn check_ungen(
    a: &HermitianOperator,
    b: &HermitianOperator,
    est_a: &Estimator,
    est_b: &Estimator,
    rho: &DensityOperator,
    tol: &Tolerances,
) -> Result<RelationReport> {
    same_pom(est_a, est_b)?;
    let sa = estimate_stats(est_a, a, rho)?;
    let sb = estimate_stats(est_b, b, rho)?;
    let lhs = sa.dispersion * sb.inaccuracy + sa.inaccuracy * sb.dispersion + sa.inaccuracy * sb.inaccuracy;
    let pom = est_a.pom();
    Ok(RelationReport::inequality(
        RelationId::Ungen,
        lhs,
        commutator_bound(a, b, rho),
        CheckTolerance::exact(tol),
        InputsDigest::new(pom.dim())
            .pom(pom)
            .state(rho)
            .estimates(format!("{:?}/{:?}", est_a.kind(), est_b.kind())),
    )
    .with_detail("dispersion_a", sa.dispersion)
    .with_detail("dispersion_b", sb.dispersion)
    .with_detail("inaccuracy_a", sa.inaccuracy)
    .with_detail("inaccuracy_b", sb.inaccuracy))
}

/// `eps_A eps_B >= |<[A, B]>|/2` for universally unbiased estimates.
///
/// Unbiasedness `sum_k w_k f_k M_k = A` is checked on the POM's trusted block.
pub fn check_uni(
    a: &HermitianOperator,
    b: &HermitianOperator,
    est_a: &Estimator,
    est_b: &Estimator,
    rho: &DensityOperator,
    tol: &Tolerances,
) -> Result<RelationReport> {
    same_pom(est_a, est_b)?;
    for (obs, est) in [(a, est_a), (b, est_b)] {
        let residual = bias_residual(est, obs);
        if residual > 1e-8 * obs.spectral_norm().max(1.0) {
            return Err(Error::NotUnbiased { residual });
        }
    }
    let sa = estimate_stats(est_a, a, rho)?;
    let sb = estimate_stats(est_b, b, rho)?;
    let pom = est_a.pom();
    let check = if pom.grid().is_some() {
        CheckTolerance::grid(tol)
    } else {
        CheckTolerance::exact(tol)
    };
    Ok(RelationReport::inequality(
        RelationId::Uni,
        sa.inaccuracy * sb.inaccuracy,
        commutator_bound(a, b, rho),
        check,
        InputsDigest::new(pom.dim()).pom(pom).state(rho).estimates("universally unbiased"),
    )
    .with_detail("dispersion_a", sa.dispersion)
    .with_detail("dispersion_b", sb.dispersion))
}

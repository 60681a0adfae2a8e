//! Estimates of an observable from the outcome of a POM measurement.
//!
//! An [`Estimator`] assigns a real value `f_k` to each outcome. Its quality
//! against an observable `A` in state `rho` is the statistical deviation
//!
//! ```text
//! D^2 = sum_k w_k tr[(A - f_k) rho (A - f_k) M_k]
//! ```
//!
//! which is a decoupled quadratic in the `f_k`. The minimiser is the optimal
//! estimate `f_k = Re tr[rho A M_k] / tr[rho M_k]`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{CMatrix, DensityOperator, HermitianOperator, C64};
use crate::pom::{self, OutcomeValue, Pom};

/// Below this `tr[rho M_k]` an outcome is treated as impossible.
pub const ZERO_PROBABILITY: f64 = 1e-14;
const CLIP: f64 = 1e-10;
const NEGATIVE_DEVIATION: f64 = 1e-9;
const BIAS_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateKind {
    OptimalWithState,
    OptimalPure,
    NoInfo,
    UnbiasedCorrected,
    Linear,
    Custom,
}

#[derive(Clone, Debug)]
pub struct Estimator {
    pom: Arc<Pom>,
    values: Vec<f64>,
    kind: EstimateKind,
    zero_probability: Vec<usize>,
    out_of_range: Vec<usize>,
}

impl Estimator {
    pub fn new(pom: Arc<Pom>, values: Vec<f64>, kind: EstimateKind) -> Result<Self> {
        if values.len() != pom.len() {
            return Err(Error::DimensionMismatch {
                context: "estimator values",
                expected: pom.len(),
                found: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("estimate for outcome {k} is not finite")));
        }
        Ok(Self {
            pom,
            values,
            kind,
            zero_probability: Vec::new(),
            out_of_range: Vec::new(),
        })
    }

    /// Uses component `component` of each outcome's value as the estimate.
    pub fn from_outcome_values(pom: Arc<Pom>, component: usize) -> Result<Self> {
        let values = pom
            .outcomes()
            .iter()
            .map(|o| {
                o.value.component(component).ok_or_else(|| {
                    Error::InvalidParameter(format!("outcome {} has no component {component}", o.label))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pom, values, EstimateKind::Custom)
    }

    /// Constant estimate `c` on every outcome.
    pub fn constant(pom: Arc<Pom>, c: f64) -> Self {
        let n = pom.len();
        Self::new(pom, vec![c; n], EstimateKind::Custom).expect("finite constant")
    }

    pub fn pom(&self) -> &Arc<Pom> {
        &self.pom
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> EstimateKind {
        self.kind
    }

    pub fn zero_probability(&self) -> &[usize] {
        &self.zero_probability
    }

    pub fn out_of_range(&self) -> &[usize] {
        &self.out_of_range
    }

    pub fn with_kind(mut self, kind: EstimateKind) -> Self {
        self.kind = kind;
        self
    }

    /// `sum_k w_k f_k M_k`.
    pub fn operator(&self) -> HermitianOperator {
        HermitianOperator::from_hermitian_parts(self.pom.weighted_sum(&self.values))
    }

    pub fn to_json(&self) -> EstimatorJson {
        EstimatorJson {
            pom_id: self.pom.id().to_string(),
            values: self.values.clone(),
            meta: EstimatorMeta {
                kind: self.kind,
                zero_probability: self.zero_probability.clone(),
                out_of_range: self.out_of_range.clone(),
            },
        }
    }

    fn flag_range(&mut self, a: &HermitianOperator) {
        let spec = a.eigen();
        let slack = 1e-9 * spec.max().abs().max(spec.min().abs()).max(1.0);
        self.out_of_range = self
            .values
            .iter()
            .enumerate()
            .filter(|(k, &f)| {
                !self.zero_probability.contains(k) && (f < spec.min() - slack || f > spec.max() + slack)
            })
            .map(|(k, _)| k)
            .collect();
    }
}

impl Serialize for Estimator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorJson {
    pub pom_id: String,
    pub values: Vec<f64>,
    pub meta: EstimatorMeta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorMeta {
    pub kind: EstimateKind,
    pub zero_probability: Vec<usize>,
    pub out_of_range: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateStats {
    pub mean: f64,
    /// Root-mean-square spread of the estimate's own distribution.
    pub dispersion: f64,
    /// Statistical deviation from the target observable.
    pub inaccuracy: f64,
}

fn check_dims(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

/// Per-outcome traces against a state: `p = tr[rho M]`, `r = Re tr[rho A M]`,
/// `s = tr[A rho A M]`. All unweighted.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Moments {
    pub weight: f64,
    pub p: f64,
    pub r: f64,
    pub s: f64,
}

pub(crate) fn moments(a: &HermitianOperator, pom: &Pom, rho: &DensityOperator) -> Result<Vec<Moments>> {
    check_dims("observable vs POM", pom.dim(), a.dim())?;
    check_dims("state vs POM", pom.dim(), rho.dim())?;
    let rho_a: CMatrix = rho.matrix() * a.matrix();
    let a_rho_a: CMatrix = a.matrix() * &rho_a;
    Ok(pom
        .outcomes()
        .iter()
        .map(|o| Moments {
            weight: o.weight,
            p: o.operator.trace_with(rho.matrix()).re,
            r: o.operator.trace_with(&rho_a).re,
            s: o.operator.trace_with(&a_rho_a).re,
        })
        .collect())
}

/// `p_k = w_k tr[rho M_k]`, with tiny negative rounding clipped to zero.
pub fn probabilities(pom: &Pom, rho: &DensityOperator) -> Result<Vec<f64>> {
    check_dims("state vs POM", pom.dim(), rho.dim())?;
    Ok(pom
        .outcomes()
        .iter()
        .map(|o| {
            let p = o.weight * o.operator.trace_with(rho.matrix()).re;
            if p < 0.0 && p > -CLIP {
                0.0
            } else {
                p
            }
        })
        .collect())
}

fn deviation_sq_from(moments: &[Moments], values: &[f64]) -> Result<f64> {
    let d2: f64 = moments
        .iter()
        .zip(values)
        .map(|(m, &f)| m.weight * (m.s - 2.0 * f * m.r + f * f * m.p))
        .sum();
    if d2 < -NEGATIVE_DEVIATION {
        return Err(Error::NegativeDeviation { value: d2 });
    }
    Ok(d2.max(0.0))
}

/// `D^2`; see the module documentation.
pub fn statistical_deviation_sq(a: &HermitianOperator, est: &Estimator, rho: &DensityOperator) -> Result<f64> {
    deviation_sq_from(&moments(a, est.pom(), rho)?, est.values())
}

pub fn statistical_deviation(a: &HermitianOperator, est: &Estimator, rho: &DensityOperator) -> Result<f64> {
    statistical_deviation_sq(a, est, rho).map(f64::sqrt)
}

/// Generalised Hilbert-Schmidt distance `sum_k w_k tr[M_k (A - m_k)^2]`
/// (square-rooted) using the scalar outcome values.
pub fn hs_distance(a: &HermitianOperator, pom: &Pom) -> Result<f64> {
    check_dims("observable vs POM", pom.dim(), a.dim())?;
    let a2 = a.matrix() * a.matrix();
    let mut d2 = 0.0;
    for o in pom.outcomes() {
        let m = o.value.as_scalar().ok_or_else(|| {
            Error::InvalidParameter(format!("outcome {} does not carry a scalar value", o.label))
        })?;
        let t = o.operator.trace_with(&a2).re - 2.0 * m * o.operator.trace_with(a.matrix()).re
            + m * m * o.operator.trace();
        d2 += o.weight * t;
    }
    Ok(d2.max(0.0).sqrt())
}

/// Minimiser of the statistical deviation for the given prior state.
pub fn optimal_estimate(a: &HermitianOperator, pom: &Arc<Pom>, rho: &DensityOperator) -> Result<Estimator> {
    let ms = moments(a, pom, rho)?;
    let mut zero = Vec::new();
    let values = ms
        .iter()
        .enumerate()
        .map(|(k, m)| {
            if m.p < ZERO_PROBABILITY {
                zero.push(k);
                0.0
            } else {
                m.r / m.p
            }
        })
        .collect();
    let kind = if (rho.purity() - 1.0).abs() < 1e-10 {
        EstimateKind::OptimalPure
    } else {
        EstimateKind::OptimalWithState
    };
    let mut est = Estimator::new(pom.clone(), values, kind)?;
    est.zero_probability = zero;
    est.flag_range(a);
    Ok(est)
}

/// `f_k = tr[A M_k] / tr[M_k]`: the estimate nearest to `A` in the
/// Hilbert-Schmidt sense.
pub fn optimal_estimate_no_info(a: &HermitianOperator, pom: &Arc<Pom>) -> Result<Estimator> {
    check_dims("observable vs POM", pom.dim(), a.dim())?;
    let values = pom
        .outcomes()
        .iter()
        .enumerate()
        .map(|(k, o)| {
            let t = o.operator.trace();
            if t < ZERO_PROBABILITY {
                Err(Error::ZeroTraceOutcome { index: k })
            } else {
                Ok(o.operator.trace_with(a.matrix()).re / t)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut est = Estimator::new(pom.clone(), values, EstimateKind::NoInfo)?;
    est.flag_range(a);
    Ok(est)
}

/// Largest entry of `B - A` on the leading `block` x `block` corner.
fn block_max(m: &CMatrix, block: usize) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..block {
        for j in 0..block {
            worst = worst.max(m[(i, j)].norm());
        }
    }
    worst
}

/// Removes the bias `sum_k w_k f_k M_k - A` of an estimate.
///
/// A bias that is a multiple of the identity on the POM's trusted block is
/// subtracted. For qubit POMs with Bloch-vector outcomes the universally
/// unbiased estimate `a_0 + (Lambda^{-1} a) . m` is returned, where
/// `A = a_0 + a . sigma` and `Lambda = sum q m m^T`.
pub fn unbiased_correction(est: &Estimator, a: &HermitianOperator) -> Result<Estimator> {
    let pom = est.pom();
    check_dims("observable vs POM", pom.dim(), a.dim())?;
    let block = pom.trusted_dim();
    let bias = est.operator().matrix() - a.matrix();
    let r = (0..block).map(|i| bias[(i, i)].re).sum::<f64>() / block as f64;
    let mut residual_op = bias.clone();
    for i in 0..residual_op.nrows() {
        residual_op[(i, i)] -= C64::new(r, 0.0);
    }
    let residual = block_max(&residual_op, block);
    let scale = a.spectral_norm().max(1.0);
    if residual <= BIAS_TOL * scale {
        let values = est.values().iter().map(|f| f - r).collect();
        return Estimator::new(pom.clone(), values, EstimateKind::UnbiasedCorrected);
    }

    if let Some(lambda) = pom::spin_second_moment(pom) {
        let paulis = pom::pauli_matrices();
        let a0 = a.trace() / 2.0;
        let coeffs: Vec<f64> = paulis
            .iter()
            .map(|s| crate::operator::trace_product(s, a.matrix()).re / 2.0)
            .collect();
        let lam = nalgebra::Matrix3::from_fn(|i, j| lambda[i][j]);
        let inv = lam.try_inverse().filter(|_| lam.determinant().abs() > 1e-12).ok_or(
            Error::NotCorrectable { residual },
        )?;
        let c = inv * nalgebra::Vector3::new(coeffs[0], coeffs[1], coeffs[2]);
        let values = pom
            .outcomes()
            .iter()
            .map(|o| match o.value {
                OutcomeValue::Bloch(m) => a0 + c[0] * m[0] + c[1] * m[1] + c[2] * m[2],
                _ => unreachable!("spin_second_moment requires Bloch values"),
            })
            .collect();
        return Estimator::new(pom.clone(), values, EstimateKind::UnbiasedCorrected);
    }
    Err(Error::NotCorrectable { residual })
}

/// `max |sum_k w_k f_k M_k - A|` on the trusted block.
pub fn bias_residual(est: &Estimator, a: &HermitianOperator) -> f64 {
    let bias = est.operator().matrix() - a.matrix();
    block_max(&bias, est.pom().trusted_dim())
}

pub fn estimate_stats(est: &Estimator, a: &HermitianOperator, rho: &DensityOperator) -> Result<EstimateStats> {
    let ms = moments(a, est.pom(), rho)?;
    let mut mean = 0.0;
    let mut second = 0.0;
    for (m, &f) in ms.iter().zip(est.values()) {
        let p = m.weight * m.p;
        mean += p * f;
        second += p * f * f;
    }
    Ok(EstimateStats {
        mean,
        dispersion: (second - mean * mean).max(0.0).sqrt(),
        inaccuracy: deviation_sq_from(&ms, est.values())?.sqrt(),
    })
}

/// Single ket of a rank-one outcome operator, scaled so `|v|^2 = tr M`.
fn rank_one_ket(op: &pom::OutcomeOperator) -> crate::operator::CVector {
    match op {
        pom::OutcomeOperator::Factored(v) if v.ncols() == 1 => v.column(0).into_owned(),
        other => {
            let spec = other.to_hermitian().eigen();
            let (j, top) = spec
                .values
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc });
            spec.vectors.column(j).scale(top.max(0.0).sqrt())
        }
    }
}

/// Optimal estimate of the quantity measured by the complete POM `a_pom`
/// from an outcome of the complete POM `m_pom`.
pub fn optimal_estimate_complete_pom(
    a_pom: &Pom,
    m_pom: &Arc<Pom>,
    rho: &DensityOperator,
) -> Result<Estimator> {
    check_dims("POM pair", a_pom.dim(), m_pom.dim())?;
    for (what, p) in [("first", a_pom), ("second", &**m_pom)] {
        if !p.is_rank_one_projective(1e-8) {
            return Err(Error::InvalidPom(format!("{what} POM is not a complete rank-one projective POM")));
        }
    }
    let a_kets: Vec<_> = a_pom.outcomes().iter().map(|o| rank_one_ket(&o.operator)).collect();
    let m_kets: Vec<_> = m_pom.outcomes().iter().map(|o| rank_one_ket(&o.operator)).collect();
    for (i, a) in a_kets.iter().enumerate() {
        for (j, m) in m_kets.iter().enumerate() {
            let overlap = a.dotc(m).norm_sqr();
            if !(1e-10..=1.0 - 1e-10).contains(&overlap) {
                return Err(Error::ProportionalKets {
                    a_index: i,
                    m_index: j,
                    overlap,
                });
            }
        }
    }
    let d = a_pom.dim();
    let mut a_bar = CMatrix::zeros(d, d);
    for (o, ket) in a_pom.outcomes().iter().zip(&a_kets) {
        let value = o.value.as_scalar().ok_or_else(|| {
            Error::InvalidParameter(format!("outcome {} does not carry a scalar value", o.label))
        })?;
        a_bar += (ket * ket.adjoint()).scale(value);
    }
    optimal_estimate(&HermitianOperator::from_hermitian_parts(a_bar), m_pom, rho)
}

/// Checks that a non-selective ideal measurement of `M` leaves the optimal
/// estimate of a compatible `A` unchanged: the estimate computed from
/// `sum_k P_k rho P_k` equals the one computed from `rho`.
pub fn repeatability_check(a: &HermitianOperator, m: &HermitianOperator, rho: &DensityOperator) -> Result<bool> {
    check_dims("observable pair", a.dim(), m.dim())?;
    let comm = a.commutator(m);
    let norm = comm.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if norm > 1e-10 * a.spectral_norm().max(1.0) * m.spectral_norm().max(1.0) {
        return Err(Error::NotCommuting { norm });
    }
    let pom = Arc::new(pom::projective_pom(m));
    let mut collapsed = CMatrix::zeros(m.dim(), m.dim());
    for o in pom.outcomes() {
        let p = o.operator.dense();
        collapsed += &p * rho.matrix() * &p;
    }
    let rho_bar = DensityOperator::new(collapsed)?;
    let before = optimal_estimate(a, &pom, rho)?;
    let after = optimal_estimate(a, &pom, &rho_bar)?;
    let scale = a.spectral_norm().max(1.0);
    Ok(before
        .values()
        .iter()
        .zip(after.values())
        .all(|(x, y)| (x - y).abs() <= 1e-10 * scale))
}

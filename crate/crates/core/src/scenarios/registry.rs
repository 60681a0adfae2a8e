//! Named scenarios driven by JSON parameter blocks.

use std::sync::Arc;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::{json, Value};

use super::epr::{epr_closed_form, epr_numeric, EprGrid, EprParams};
use super::linear::{linear_estimate, optimize_squeezing, LinearEstimateInputs, SqueezingInputs};
use super::potential::{quantum_potential_estimate, GridWavefunction};
use super::thermal::{oscillator_thermal, Oscillator};
use crate::error::{Error, Result};
use crate::estimation::{optimal_estimate_no_info, unbiased_correction, Estimator};
use crate::fock;
use crate::heterodyne::{check_uncanon, heterodyne_suite, EstimateMode};
use crate::operator::{DensityOperator, HermitianOperator, Ket, C64};
use crate::pom::{coherent_pom_with, inefficient_photon_pom, pauli_matrices, spin_pom, tetrahedral_directions, GridSpec};
use crate::random::{random_state, suite_rng};
use crate::report::ReportRow;
use crate::tolerance::Tolerances;

pub const SCENARIO_NAMES: [&str; 8] = [
    "heterodyne",
    "epr",
    "thermal",
    "potential",
    "linear",
    "squeezing",
    "spin",
    "inefficient",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioOutput {
    pub scenario: String,
    /// Parameters after defaults were filled in.
    pub params: Value,
    pub results: Value,
    pub rows: Vec<ReportRow>,
}

fn parse<T: DeserializeOwned + Default>(params: &Value) -> Result<T> {
    match params {
        Value::Null => Ok(T::default()),
        v => Ok(serde_json::from_value(v.clone())?),
    }
}

fn output(name: &str, params: &impl Serialize, results: Value, rows: Vec<ReportRow>) -> Result<ScenarioOutput> {
    Ok(ScenarioOutput {
        scenario: name.into(),
        params: serde_json::to_value(params)?,
        results,
        rows,
    })
}

/// Runs scenario `name`; `seed` feeds any random draws.
pub fn run_scenario(name: &str, params: &Value, seed: u64, tol: &Tolerances) -> Result<ScenarioOutput> {
    match name {
        "heterodyne" => heterodyne(parse(params)?, tol),
        "epr" => epr(parse(params)?),
        "thermal" => thermal(parse(params)?),
        "potential" => potential(parse(params)?),
        "linear" => linear(parse(params)?),
        "squeezing" => squeezing(parse(params)?),
        "spin" => spin(parse(params)?, seed),
        "inefficient" => inefficient(parse(params)?),
        other => Err(Error::InvalidParameter(format!(
            "unknown scenario `{other}`; expected one of {}",
            SCENARIO_NAMES.join(", ")
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    Coherent { beta: [f64; 2] },
    Number { n: usize },
    /// Normalised superposition of number states with the given amplitudes.
    Superposition { amplitudes: Vec<[f64; 2]> },
}

impl StateSpec {
    pub fn density(&self, dim: usize) -> Result<DensityOperator> {
        let ket = match self {
            StateSpec::Coherent { beta } => fock::coherent_state(dim, C64::new(beta[0], beta[1])),
            StateSpec::Number { n } => {
                if *n >= dim {
                    return Err(Error::InvalidParameter(format!("number state {n} needs fock_dim > {n}")));
                }
                fock::number_state(dim, *n)
            }
            StateSpec::Superposition { amplitudes } => {
                if amplitudes.len() > dim {
                    return Err(Error::InvalidParameter("more amplitudes than fock_dim".into()));
                }
                let mut v = vec![C64::new(0.0, 0.0); dim];
                for (slot, a) in v.iter_mut().zip(amplitudes) {
                    *slot = C64::new(a[0], a[1]);
                }
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if !(norm > 0.0) {
                    return Err(Error::InvalidParameter("superposition has zero norm".into()));
                }
                Ket::from_slice(&v.iter().map(|z| z / norm).collect::<Vec<_>>())?
            }
        };
        Ok(DensityOperator::pure(&ket))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeterodyneParams {
    pub fock_dim: usize,
    pub state: StateSpec,
    /// Defaults to `|<a>| + 6`.
    pub radius: Option<f64>,
    pub points_per_axis: usize,
    /// Canonical-product scale; defaults to `1/2`.
    pub hbar: Option<f64>,
}

impl Default for HeterodyneParams {
    fn default() -> Self {
        Self {
            fock_dim: 40,
            state: StateSpec::Coherent { beta: [1.0, 0.0] },
            radius: None,
            points_per_axis: 81,
            hbar: None,
        }
    }
}

fn heterodyne(mut p: HeterodyneParams, tol: &Tolerances) -> Result<ScenarioOutput> {
    let rho = p.state.density(p.fock_dim)?;
    let a = fock::annihilation(p.fock_dim);
    let center = crate::operator::trace_product(rho.matrix(), &a);
    let radius = *p.radius.get_or_insert(center.norm() + 6.0);
    let spec = GridSpec::centered(center, radius, p.points_per_axis);
    let pom = Arc::new(coherent_pom_with(p.fock_dim, spec, tol)?);
    let suite = heterodyne_suite(&rho, &pom, tol)?;
    let optimal = check_uncanon(&rho, &pom, EstimateMode::Optimal, p.hbar, tol)?;
    let joint = check_uncanon(&rho, &pom, EstimateMode::NoInfo, p.hbar, tol)?;
    let mut rows: Vec<ReportRow> = suite.reports.iter().map(|r| ReportRow::from_relation("heterodyne", r)).collect();
    rows.push(ReportRow::from_relation("heterodyne", &optimal));
    rows.push(ReportRow::from_relation("heterodyne:joint", &joint));
    let an = &suite.analysis;
    let results = json!({
        "analysis": an,
        "dispersion_product_optimal": an.dispersion[0] * an.dispersion[1],
        "dispersion_product_joint": an.joint_dispersion[0] * an.joint_dispersion[1],
        "accuracy_sum": an.inaccuracy[0].powi(2) + an.inaccuracy[1].powi(2),
        "uncanon": [optimal, joint],
    });
    output("heterodyne", &p, results, rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EprScenarioParams {
    pub sigma: f64,
    pub tau: f64,
    pub a: f64,
    pub p0: f64,
    pub hbar: f64,
    pub numeric: bool,
    pub points_per_axis: Option<usize>,
    pub x_half_width: Option<f64>,
    pub u_spacing: Option<f64>,
}

impl Default for EprScenarioParams {
    fn default() -> Self {
        let e = EprParams::default();
        Self {
            sigma: e.sigma,
            tau: e.tau,
            a: e.a,
            p0: e.p0,
            hbar: e.hbar,
            numeric: true,
            points_per_axis: None,
            x_half_width: None,
            u_spacing: None,
        }
    }
}

fn epr(mut p: EprScenarioParams) -> Result<ScenarioOutput> {
    let params = EprParams {
        sigma: p.sigma,
        tau: p.tau,
        a: p.a,
        p0: p.p0,
        hbar: p.hbar,
    };
    let closed = epr_closed_form(&params)?;
    let mut rows = vec![ReportRow::equal(
        "epr:closed",
        "ungen",
        closed.ungen_lhs,
        closed.ungen_rhs,
        1e-12 * p.hbar,
    )];
    let mut numeric = None;
    if p.numeric {
        let rec = EprGrid::recommended(&params);
        let grid = EprGrid {
            points_per_axis: *p.points_per_axis.get_or_insert(rec.points_per_axis),
            x_half_width: *p.x_half_width.get_or_insert(rec.x_half_width),
            u_spacing: *p.u_spacing.get_or_insert(rec.u_spacing),
        };
        let r = epr_numeric(&params, &grid)?;
        rows.push(ReportRow::at_least("epr:numeric", "ungen", r.ungen_lhs, r.ungen_rhs, 1e-3 * p.hbar));
        rows.push(ReportRow::equal("epr:numeric", "epr_closed_form", r.max_relative_gap(&closed), 0.0, 1e-3));
        numeric = Some(r);
    }
    let results = json!({ "closed_form": closed, "numeric": numeric });
    output("epr", &p, results, rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalParams {
    pub mass: f64,
    pub omega: f64,
    pub hbar: f64,
    pub betas: Vec<f64>,
    /// Large `beta` at which the estimate should be the ground energy.
    pub ground_beta: f64,
}

impl Default for ThermalParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            omega: 1.0,
            hbar: 1.0,
            betas: vec![0.5, 1.0, 2.0],
            ground_beta: 50.0,
        }
    }
}

fn thermal(p: ThermalParams) -> Result<ScenarioOutput> {
    let osc = Oscillator {
        mass: p.mass,
        omega: p.omega,
        hbar: p.hbar,
    };
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &beta in &p.betas {
        let r = oscillator_thermal(&osc, beta)?;
        let name = format!("thermal:beta={beta}");
        let scale = osc.quantum().max(1.0);
        rows.push(ReportRow::equal(&name, "thermal_closed_form", r.closed_form_gap, 0.0, 1e-6 * scale));
        rows.push(ReportRow::equal(&name, "thermal_log_derivative", r.log_derivative_gap, 0.0, 1e-6 * scale));
        reports.push(r);
    }
    let ground = oscillator_thermal(&osc, p.ground_beta)?;
    rows.push(ReportRow::equal(
        &format!("thermal:beta={}", p.ground_beta),
        "thermal_ground_energy",
        ground.ground_energy_gap,
        0.0,
        1e-8 * osc.quantum().max(1.0),
    ));
    let results = json!({ "reports": reports, "ground": ground });
    output("thermal", &p, results, rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialParams {
    pub mass: f64,
    pub omega: f64,
    pub hbar: f64,
    pub points: usize,
    /// Half-width in units of the oscillator length `sqrt(hbar / m omega)`.
    pub half_width: f64,
}

impl Default for PotentialParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            omega: 1.0,
            hbar: 1.0,
            points: 241,
            half_width: 6.0,
        }
    }
}

/// Oscillator ground state; the estimate should be flat at `hbar omega / 2`.
fn potential(p: PotentialParams) -> Result<ScenarioOutput> {
    let length = (p.hbar / (p.mass * p.omega)).sqrt();
    let w = p.half_width * length;
    let psi = GridWavefunction::sample(-w, w, p.points, p.hbar, p.mass, |x| {
        C64::new((-(x / length).powi(2) / 2.0).exp(), 0.0)
    })?;
    let v: Vec<f64> = (0..psi.len()).map(|i| 0.5 * p.mass * (p.omega * psi.x(i)).powi(2)).collect();
    let est = quantum_potential_estimate(&psi, &v)?;
    let ground = 0.5 * p.hbar * p.omega;
    let interior_gap = (0..psi.len())
        .filter(|&i| psi.x(i).abs() < 2.5 * length)
        .filter_map(|i| est.energy[i].map(|e| (e - ground).abs()))
        .fold(0.0, f64::max);
    let h = psi.spacing / length;
    let rows = vec![
        ReportRow::equal("potential", "potential_direct", est.max_direct_gap, 0.0, 1e-9 * ground.max(1.0)),
        ReportRow::equal("potential", "potential_ground_energy", interior_gap, 0.0, h * h * ground),
    ];
    let results = json!({ "ground_energy": ground, "interior_gap": interior_gap, "estimate": est });
    output("potential", &p, results, rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearParams(#[serde(with = "LinearInputsDef")] LinearEstimateInputs);

#[derive(Serialize, Deserialize)]
#[serde(remote = "LinearEstimateInputs", deny_unknown_fields)]
struct LinearInputsDef {
    mean_x: f64,
    var_x: f64,
    mean_p: f64,
    var_p: f64,
    var_xprime: f64,
    var_pprime: f64,
    #[serde(default = "one")]
    hbar: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for LinearParams {
    fn default() -> Self {
        Self(LinearEstimateInputs {
            mean_x: 0.0,
            var_x: 1.0,
            mean_p: 0.0,
            var_p: 1.0,
            var_xprime: 0.5,
            var_pprime: 0.5,
            hbar: 1.0,
        })
    }
}

fn linear(p: LinearParams) -> Result<ScenarioOutput> {
    let r = linear_estimate(&p.0)?;
    let mut rows = Vec::new();
    for (tag, q) in [("linear:x", &r.x), ("linear:p", &r.p)] {
        rows.push(ReportRow::at_least(tag, "linear_inaccuracy", q.raw_inaccuracy, q.inaccuracy, 0.0));
        rows.push(ReportRow::equal(tag, "linear_dispersion", q.shrunk_raw_dispersion(), q.dispersion, 1e-12 * q.dispersion.max(1.0)));
    }
    output("linear", &p, serde_json::to_value(r)?, rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SqueezingParams(#[serde(with = "SqueezingInputsDef")] SqueezingInputs);

#[derive(Serialize, Deserialize)]
#[serde(remote = "SqueezingInputs", deny_unknown_fields)]
struct SqueezingInputsDef {
    #[serde(default)]
    mean_x: f64,
    var_x: f64,
    #[serde(default)]
    mean_p: f64,
    var_p: f64,
    #[serde(default = "one")]
    hbar: f64,
}

impl Default for SqueezingParams {
    fn default() -> Self {
        Self(SqueezingInputs::symmetric(0.5, 1.0))
    }
}

fn squeezing(p: SqueezingParams) -> Result<ScenarioOutput> {
    let r = optimize_squeezing(&p.0)?;
    let c = r.hbar / (2.0 * r.uncertainty_product);
    let rows = vec![ReportRow::equal(
        "squeezing",
        "linear_dispersion_product",
        r.interior_dispersion_product,
        r.uncertainty_product / (1.0 + c),
        1e-9 * r.hbar,
    )];
    let results = json!({ "report": r, "regimes_agree": r.regimes_agree() });
    output("squeezing", &p, results, rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpinParams {
    pub states: usize,
    pub hbar: f64,
}

impl Default for SpinParams {
    fn default() -> Self {
        Self { states: 20, hbar: 1.0 }
    }
}

/// Tetrahedral spin POM: corrected spin estimates are `(3 hbar / 2) m` and
/// unbiased for every state.
fn spin(p: SpinParams, seed: u64) -> Result<ScenarioOutput> {
    let dirs = tetrahedral_directions();
    let pom = Arc::new(spin_pom(&dirs, &[0.25; 4])?);
    let start = Estimator::constant(pom.clone(), 0.0);
    let spins: Vec<HermitianOperator> = pauli_matrices()
        .into_iter()
        .map(|s| HermitianOperator::new(s).map(|h| h.scaled(p.hbar / 2.0)))
        .collect::<Result<_>>()?;
    let mut value_gap: f64 = 0.0;
    let mut estimates = Vec::new();
    for (j, s) in spins.iter().enumerate() {
        let est = unbiased_correction(&start, s)?;
        for (f, m) in est.values().iter().zip(&dirs) {
            value_gap = value_gap.max((f - 1.5 * p.hbar * m[j]).abs());
        }
        estimates.push(est);
    }
    let mut rng = suite_rng(seed);
    let mut bias: f64 = 0.0;
    for _ in 0..p.states {
        let rho = random_state(2, &mut rng);
        let probs = crate::estimation::probabilities(&pom, &rho)?;
        for (s, est) in spins.iter().zip(&estimates) {
            let mean: f64 = probs.iter().zip(est.values()).map(|(q, f)| q * f).sum();
            bias = bias.max((mean - s.expectation(&rho)).abs());
        }
    }
    let scale = p.hbar.max(1.0);
    let rows = vec![
        ReportRow::equal("spin", "spin_values", value_gap, 0.0, 1e-12 * scale),
        ReportRow::equal("spin", "spin_unbiased", bias, 0.0, 1e-10 * scale),
    ];
    let results = json!({
        "seed": seed,
        "estimates": estimates.iter().map(|e| e.to_json()).collect::<Vec<_>>(),
    });
    output("spin", &p, results, rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InefficientParams {
    pub fock_dim: usize,
    pub eta: f64,
    pub max_count: usize,
    pub omega: f64,
    pub hbar: f64,
}

impl Default for InefficientParams {
    fn default() -> Self {
        Self {
            fock_dim: 80,
            eta: 0.8,
            max_count: 15,
            omega: 1.0,
            hbar: 1.0,
        }
    }
}

/// Photodetection with efficiency `eta`, estimating the energy `hbar omega N`.
fn inefficient(p: InefficientParams) -> Result<ScenarioOutput> {
    let pom = Arc::new(inefficient_photon_pom(p.fock_dim, p.eta, p.max_count)?);
    let energy = fock::number(p.fock_dim).scaled(p.hbar * p.omega);
    let no_info = optimal_estimate_no_info(&energy, &pom)?;
    let corrected = unbiased_correction(&no_info, &energy)?;
    let quantum = p.hbar * p.omega;
    let mut no_info_gap: f64 = 0.0;
    let mut corrected_gap: f64 = 0.0;
    for m in 0..=p.max_count {
        let mf = m as f64;
        no_info_gap = no_info_gap.max((no_info.values()[m] - quantum * ((mf + 1.0) / p.eta - 1.0)).abs());
        corrected_gap = corrected_gap.max((corrected.values()[m] - quantum * mf / p.eta).abs());
    }
    let tol = 1e-8 * quantum.max(1.0) * p.max_count.max(1) as f64;
    let rows = vec![
        ReportRow::equal("inefficient", "ineff_no_info", no_info_gap, 0.0, tol),
        ReportRow::equal("inefficient", "ineff_unbiased", corrected_gap, 0.0, tol),
    ];
    let trusted = |e: &Estimator| e.values()[..=p.max_count].to_vec();
    let results = json!({
        "no_info": trusted(&no_info),
        "unbiased": trusted(&corrected),
        "trusted_outcomes": p.max_count + 1,
    });
    output("inefficient", &p, results, rows)
}

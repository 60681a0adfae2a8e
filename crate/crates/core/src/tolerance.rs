//! Numerical tolerances shared across the crate.
//!
//! Every knob can be overridden from the environment with the
//! `OPTEST_TOL_` prefix, e.g. `OPTEST_TOL_SATURATION=1e-7`.

use serde::{Deserialize, Serialize};

pub const ENV_PREFIX: &str = "OPTEST_TOL_";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Allowed Hermiticity violation before symmetrisation.
    pub hermitian: f64,
    /// Smallest eigenvalue accepted as "positive".
    pub positivity: f64,
    /// Allowed deviation of a density operator's trace from one.
    pub trace: f64,
    /// Allowed deviation of `sum_k w_k M_k` from the identity.
    pub completeness: f64,
    /// `|slack|` below which an exact finite-dimensional relation counts as saturated.
    pub saturation: f64,
    /// Same, for relations evaluated by grid quadrature.
    pub saturation_grid: f64,
    /// Negative slack tolerated before an exact relation is reported violated.
    pub slack: f64,
    /// Negative slack tolerated for grid-quadrature relations.
    pub slack_grid: f64,
    /// Largest accepted mean completeness correction for grid POMs.
    pub max_grid_correction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-8,
            positivity: 1e-10,
            trace: 1e-10,
            completeness: 1e-8,
            saturation: 1e-6,
            saturation_grid: 1e-3,
            slack: 1e-9,
            slack_grid: 1e-3,
            max_grid_correction: 0.10,
        }
    }
}

impl Tolerances {
    /// Defaults with any `OPTEST_TOL_*` overrides applied.
    ///
    /// Unparsable values are reported as errors rather than ignored.
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|key| std::env::var(key).ok())
    }

    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let mut tol = Self::default();
        for (name, slot) in [
            ("HERMITIAN", &mut tol.hermitian),
            ("POSITIVITY", &mut tol.positivity),
            ("TRACE", &mut tol.trace),
            ("COMPLETENESS", &mut tol.completeness),
            ("SATURATION", &mut tol.saturation),
            ("SATURATION_GRID", &mut tol.saturation_grid),
            ("SLACK", &mut tol.slack),
            ("SLACK_GRID", &mut tol.slack_grid),
            ("MAX_GRID_CORRECTION", &mut tol.max_grid_correction),
        ] {
            let key = format!("{ENV_PREFIX}{name}");
            if let Some(raw) = lookup(&key) {
                let value: f64 = raw
                    .trim()
                    .parse()
                    .map_err(|_| format!("{key}: cannot parse {raw:?} as a number"))?;
                if !(value.is_finite() && value >= 0.0) {
                    return Err(format!("{key}: must be a finite non-negative number"));
                }
                *slot = value;
            }
        }
        Ok(tol)
    }
}

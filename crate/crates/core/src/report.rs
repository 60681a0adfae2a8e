//! Flat report rows shared by every scenario and suite, with JSON and CSV
//! renderings.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::relations::RelationReport;
use crate::suites::SuiteSummary;

pub const CSV_COLUMNS: [&str; 7] = ["scenario", "relation_id", "lhs", "rhs", "slack", "saturated", "tolerance"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub relation_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub saturated: bool,
    pub tolerance: f64,
    pub passed: bool,
}

impl ReportRow {
    pub fn from_relation(scenario: &str, r: &RelationReport) -> Self {
        Self {
            scenario: scenario.into(),
            relation_id: r.relation_id.as_str().into(),
            lhs: r.lhs,
            rhs: r.rhs,
            slack: r.slack,
            saturated: r.saturated,
            tolerance: r.tolerance,
            passed: r.passed,
        }
    }

    /// `lhs = rhs` within `tolerance`.
    pub fn equal(scenario: &str, relation_id: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let slack = lhs - rhs;
        Self {
            scenario: scenario.into(),
            relation_id: relation_id.into(),
            lhs,
            rhs,
            slack,
            saturated: slack.abs() <= tolerance,
            passed: slack.abs() <= tolerance,
            tolerance,
        }
    }

    /// `lhs >= rhs` up to `tolerance`.
    pub fn at_least(scenario: &str, relation_id: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let slack = lhs - rhs;
        Self {
            scenario: scenario.into(),
            relation_id: relation_id.into(),
            lhs,
            rhs,
            slack,
            saturated: slack.abs() <= tolerance,
            passed: slack >= -tolerance,
            tolerance,
        }
    }

    /// One row per suite, carrying its worst instance.
    pub fn from_suite(s: &SuiteSummary) -> Self {
        let scenario = format!("suite:{}", s.suite);
        match &s.worst_report {
            Some(r) => {
                let mut row = Self::from_relation(&scenario, r);
                row.passed = s.passed();
                row
            }
            None => {
                let mut row = Self::equal(&scenario, &s.relation_id, s.worst, 0.0, s.tolerance);
                row.passed = s.passed();
                row
            }
        }
    }
}

/// Same spelling as the JSON report; non-finite values as `inf`/`NaN`.
fn number(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite floats serialize")
    } else {
        x.to_string()
    }
}

/// Renders rows with the fixed column set. Floats use the shortest
/// round-trip representation so output is byte-stable.
pub fn rows_to_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.relation_id.clone(),
            number(r.lhs),
            number(r.rhs),
            number(r.slack),
            r.saturated.to_string(),
            number(r.tolerance),
        ])
        .map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| csv_error(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8 for utf-8 input"))
}

fn csv_error(e: csv::Error) -> crate::error::Error {
    crate::error::Error::InvalidParameter(format!("csv output: {e}"))
}

pub fn all_passed(rows: &[ReportRow]) -> bool {
    rows.iter().all(|r| r.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_fixed_header_and_rows() {
        let rows = vec![
            ReportRow::equal("epr", "ungen", 0.5, 0.5, 1e-12),
            ReportRow::at_least("x", "geom", 0.1, 0.3, 1e-9),
        ];
        let text = rows_to_csv(&rows).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "scenario,relation_id,lhs,rhs,slack,saturated,tolerance");
        assert_eq!(lines.next().unwrap(), "epr,ungen,0.5,0.5,0.0,true,1e-12");
        assert!(!rows[1].passed);
        assert!(!all_passed(&rows));
    }

    #[test]
    fn inequality_passes_within_tolerance() {
        let r = ReportRow::at_least("s", "varsum", 1.0, 1.0 + 1e-12, 1e-9);
        assert!(r.passed && r.saturated);
    }
}

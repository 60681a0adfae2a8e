//! Product-space representation of a POM by orthogonal projectors.
//!
//! A `K`-outcome POM on a `d`-dimensional system is realised on
//! `C^d (x) C^K` with the ancilla prepared in `|0><0|`. The isometry
//! `V|s> = sum_k sqrt(w_k M_k)|s> (x) |k>` is completed to a unitary `U`, and
//! `M'_k = U^dagger (1 (x) |k><k|) U` reproduces the statistics:
//! `tr[rho M_k] w_k = tr[(rho (x) rho') M'_k]`.

use crate::error::{Error, Result};
use crate::operator::{spectral_apply, CMatrix, CVector, DensityOperator, HermitianOperator, Tensor, C64, ZERO};
use crate::pom::{OutcomeOperator, OutcomeValue, Pom, PomOutcome};
use crate::random::{random_state, suite_rng};

const REPRODUCTION_TOL: f64 = 1e-10;
const RESIDUAL_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct NaimarkExtension {
    pub sys_dim: usize,
    pub anc_dim: usize,
    pub ancilla_state: DensityOperator,
    pub unitary: CMatrix,
    /// `sum_k k M'_k`: a single observable whose eigenvalue is the outcome index.
    pub extended_operator: HermitianOperator,
    pub projections: Vec<HermitianOperator>,
}

impl NaimarkExtension {
    /// `tr[(rho (x) rho') M'_k]` for every outcome.
    pub fn probabilities(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        if rho.dim() != self.sys_dim {
            return Err(Error::DimensionMismatch {
                context: "Naimark extension state",
                expected: self.sys_dim,
                found: rho.dim(),
            });
        }
        let joint = rho.tensor(&self.ancilla_state);
        Ok(self
            .projections
            .iter()
            .map(|p| p.expectation(&joint))
            .collect())
    }

    /// The extended measurement as a projective POM on the product space,
    /// carrying the given per-outcome values.
    pub fn as_pom(&self, values: &[OutcomeValue]) -> Result<Pom> {
        if values.len() != self.projections.len() {
            return Err(Error::DimensionMismatch {
                context: "Naimark outcome values",
                expected: self.projections.len(),
                found: values.len(),
            });
        }
        let outcomes = self
            .projections
            .iter()
            .zip(values)
            .enumerate()
            .map(|(k, (p, &v))| PomOutcome::new(format!("k{k}"), v, 1.0, OutcomeOperator::Dense(p.clone())))
            .collect();
        Pom::new("naimark", self.sys_dim * self.anc_dim, outcomes)
    }
}

/// Builds the extension and checks it on five random states before returning.
pub fn naimark_extend(pom: &Pom) -> Result<NaimarkExtension> {
    let d = pom.dim();
    let k_out = pom.len();
    let n = d * k_out;

    // Columns s*K + 0 of U carry the isometry.
    let mut u = CMatrix::zeros(n, n);
    for (k, o) in pom.outcomes().iter().enumerate() {
        let root = spectral_apply(&o.operator.to_hermitian().scaled(o.weight), |x| x.max(0.0).sqrt());
        for s in 0..d {
            for i in 0..d {
                u[(i * k_out + k, s * k_out)] = root.matrix()[(i, s)];
            }
        }
    }

    let fixed: Vec<usize> = (0..d).map(|s| s * k_out).collect();
    let mut basis: Vec<CVector> = fixed.iter().map(|&c| u.column(c).into_owned()).collect();
    let gram_err = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| {
            let want = if i == j { 1.0 } else { 0.0 };
            (basis[i].dotc(&basis[j]) - C64::new(want, 0.0)).norm()
        })
        .fold(0.0, f64::max);
    if gram_err > 1e-8 {
        return Err(Error::CompletionFailure {
            column: 0,
            residual: gram_err,
        });
    }

    let free: Vec<usize> = (0..n).filter(|c| c % k_out != 0).collect();
    let mut candidates: Vec<usize> = (0..n).collect();
    for &col in &free {
        let mut best: Option<(f64, usize, CVector)> = None;
        for (pos, &e) in candidates.iter().enumerate() {
            let r = orthogonal_residual(e, n, &basis);
            let norm = r.norm();
            // Strictly greater keeps the lowest index on ties.
            if best.as_ref().map_or(true, |(b, _, _)| norm > *b) {
                best = Some((norm, pos, r));
            }
        }
        let (norm, pos, r) = best.ok_or(Error::CompletionFailure { column: col, residual: 0.0 })?;
        if norm < RESIDUAL_FLOOR {
            return Err(Error::CompletionFailure {
                column: col,
                residual: norm,
            });
        }
        candidates.remove(pos);
        let v = r.unscale(norm);
        u.set_column(col, &v);
        basis.push(v);
    }

    let mut projections = Vec::with_capacity(k_out);
    let mut extended = CMatrix::zeros(n, n);
    for k in 0..k_out {
        // U^dagger (1 (x) |k><k|) U = sum_i row_{iK+k}^dagger row_{iK+k}
        let rows = CMatrix::from_fn(d, n, |i, c| u[(i * k_out + k, c)]);
        let p = rows.adjoint() * rows;
        extended += p.scale(k as f64);
        projections.push(HermitianOperator::from_hermitian_parts(p));
    }

    let ancilla_state = DensityOperator::pure(&crate::operator::Ket::basis(k_out, 0));
    let ext = NaimarkExtension {
        sys_dim: d,
        anc_dim: k_out,
        ancilla_state,
        unitary: u,
        extended_operator: HermitianOperator::from_hermitian_parts(extended),
        projections,
    };

    let mut rng = suite_rng(0x6e61_696d);
    for _ in 0..5 {
        let rho = random_state(d, &mut rng);
        let got = ext.probabilities(&rho)?;
        for (k, o) in pom.outcomes().iter().enumerate() {
            let want = o.weight * o.operator.trace_with(rho.matrix()).re;
            let diff = (got[k] - want).abs();
            if diff > REPRODUCTION_TOL {
                return Err(Error::InvalidPom(format!(
                    "extension changes the probability of outcome {k} by {diff:.3e}"
                )));
            }
        }
    }
    Ok(ext)
}

/// `e_j` minus its projection onto `basis`, with one re-orthogonalisation pass.
fn orthogonal_residual(j: usize, n: usize, basis: &[CVector]) -> CVector {
    let mut r = CVector::from_element(n, ZERO);
    r[j] = C64::new(1.0, 0.0);
    for _ in 0..2 {
        for b in basis {
            let c = b.dotc(&r);
            r.axpy(-c, b, C64::new(1.0, 0.0));
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pom::{projective_pom, trine_pom};
    use crate::random::{random_hermitian, random_pom};

    fn assert_projective(ext: &NaimarkExtension) {
        let n = ext.sys_dim * ext.anc_dim;
        let mut total = CMatrix::zeros(n, n);
        for (i, p) in ext.projections.iter().enumerate() {
            let m = p.matrix();
            assert!((m * m - m).norm() < 1e-10);
            for q in &ext.projections[i + 1..] {
                assert!((m * q.matrix()).norm() < 1e-10);
            }
            total += m;
        }
        assert!((total - CMatrix::identity(n, n)).norm() < 1e-10);
        let u = &ext.unitary;
        assert!((u.adjoint() * u - CMatrix::identity(n, n)).norm() < 1e-10);
    }

    #[test]
    fn trine_extension_is_projective() {
        let ext = naimark_extend(&trine_pom()).unwrap();
        assert_eq!((ext.sys_dim, ext.anc_dim), (2, 3));
        assert_projective(&ext);
    }

    #[test]
    fn projective_pom_reproduced_tightly() {
        let pom = projective_pom(&random_hermitian(3, &mut suite_rng(5)));
        let ext = naimark_extend(&pom).unwrap();
        let rho = random_state(3, &mut suite_rng(6));
        let got = ext.probabilities(&rho).unwrap();
        for (k, o) in pom.outcomes().iter().enumerate() {
            assert!((got[k] - o.operator.trace_with(rho.matrix()).re).abs() < 1e-12);
        }
    }

    #[test]
    fn random_pom_extension() {
        let mut rng = suite_rng(11);
        let pom = random_pom(3, 4, &mut rng);
        let ext = naimark_extend(&pom).unwrap();
        assert_projective(&ext);
        let spec = ext.extended_operator.eigen();
        for v in spec.values.iter() {
            assert!((v - v.round()).abs() < 1e-9 && *v >= -1e-9 && *v <= 3.0 + 1e-9);
        }
    }

    #[test]
    fn deterministic_completion() {
        let a = naimark_extend(&trine_pom()).unwrap();
        let b = naimark_extend(&trine_pom()).unwrap();
        assert_eq!(a.unitary, b.unitary);
    }
}

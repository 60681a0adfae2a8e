//! Probability operator measures.
//!
//! A [`Pom`] is a list of weighted positive operators `{(m_k, w_k, M_k)}` with
//! `sum_k w_k M_k = 1`; outcome `k` occurs with probability `w_k tr[rho M_k]`.
//! Discrete POMs use unit weights. Phase-space POMs carry the quadrature weight
//! (cell area / pi) and are renormalised on the grid so that completeness holds
//! exactly; the size of that correction is kept in [`GridInfo`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, Displacer};
use crate::operator::{
    eigen_hermitian, flatten, trace_product, unflatten, CMatrix, DensityOperator,
    HermitianOperator, C64, ZERO,
};
use crate::tolerance::Tolerances;

/// Value attached to an outcome: a number, a phase-space point, or a Bloch vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OutcomeValue {
    Scalar(f64),
    Pair([f64; 2]),
    Bloch([f64; 3]),
}

impl OutcomeValue {
    pub fn as_scalar(&self) -> Option<f64> {
        match *self {
            OutcomeValue::Scalar(x) => Some(x),
            _ => None,
        }
    }

    /// Component `i` of a pair or Bloch vector; index 0 of a scalar.
    pub fn component(&self, i: usize) -> Option<f64> {
        match self {
            OutcomeValue::Scalar(x) => (i == 0).then_some(*x),
            OutcomeValue::Pair(p) => p.get(i).copied(),
            OutcomeValue::Bloch(v) => v.get(i).copied(),
        }
    }
}

/// Storage for a positive outcome operator.
#[derive(Clone, Debug, PartialEq)]
pub enum OutcomeOperator {
    Dense(HermitianOperator),
    /// `M = V V^dagger`; positive by construction. Rank-one phase-space POMs
    /// keep a single column.
    Factored(CMatrix),
}

impl OutcomeOperator {
    pub fn dim(&self) -> usize {
        match self {
            OutcomeOperator::Dense(h) => h.dim(),
            OutcomeOperator::Factored(v) => v.nrows(),
        }
    }

    pub fn dense(&self) -> CMatrix {
        match self {
            OutcomeOperator::Dense(h) => h.matrix().clone(),
            OutcomeOperator::Factored(v) => v * v.adjoint(),
        }
    }

    pub fn to_hermitian(&self) -> HermitianOperator {
        HermitianOperator::from_hermitian_parts(self.dense())
    }

    /// `tr[X M]`.
    pub fn trace_with(&self, x: &CMatrix) -> C64 {
        match self {
            OutcomeOperator::Dense(h) => trace_product(x, h.matrix()),
            OutcomeOperator::Factored(v) => {
                let mut acc = ZERO;
                for c in 0..v.ncols() {
                    let col = v.column(c);
                    let xv = x * col;
                    acc += col.dotc(&xv);
                }
                acc
            }
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            OutcomeOperator::Dense(h) => h.trace(),
            OutcomeOperator::Factored(v) => v.norm_squared(),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            OutcomeOperator::Dense(h) => h.min_eigenvalue(),
            OutcomeOperator::Factored(v) => {
                if v.ncols() < v.nrows() {
                    0.0
                } else {
                    eigen_hermitian(&(v.adjoint() * v)).min().max(0.0)
                }
            }
        }
    }

    /// `S M S^dagger`.
    pub fn sandwich(&self, s: &CMatrix) -> Self {
        match self {
            OutcomeOperator::Dense(h) => OutcomeOperator::Dense(
                HermitianOperator::from_hermitian_parts(s * h.matrix() * s.adjoint()),
            ),
            OutcomeOperator::Factored(v) => OutcomeOperator::Factored(s * v),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PomOutcome {
    pub label: String,
    pub value: OutcomeValue,
    pub weight: f64,
    pub operator: OutcomeOperator,
}

impl PomOutcome {
    pub fn new(
        label: impl Into<String>,
        value: OutcomeValue,
        weight: f64,
        operator: OutcomeOperator,
    ) -> Self {
        Self {
            label: label.into(),
            value,
            weight,
            operator,
        }
    }
}

/// Uniform square phase-space grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub center: [f64; 2],
    /// Half the side length of the square.
    pub radius: f64,
    pub points_per_axis: usize,
}

impl GridSpec {
    /// Square of half-width `radius` centred on `center`.
    pub fn centered(center: C64, radius: f64, points_per_axis: usize) -> Self {
        Self {
            center: [center.re, center.im],
            radius,
            points_per_axis,
        }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.radius / (self.points_per_axis - 1) as f64
    }

    /// Point `(i, j)`: `i` runs along the real axis, `j` along the imaginary.
    pub fn point(&self, i: usize, j: usize) -> C64 {
        let h = self.spacing();
        C64::new(
            self.center[0] - self.radius + i as f64 * h,
            self.center[1] - self.radius + j as f64 * h,
        )
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.points_per_axis + j
    }

    pub fn len(&self) -> usize {
        self.points_per_axis * self.points_per_axis
    }

    pub fn is_empty(&self) -> bool {
        self.points_per_axis == 0
    }

    pub fn max_abs(&self) -> f64 {
        let [cx, cy] = self.center;
        let r = self.radius;
        (cx.abs() + r).hypot(cy.abs() + r)
    }

    fn check(&self) -> Result<()> {
        if self.points_per_axis < 3 || !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid needs radius > 0 and at least 3 points per axis, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Size of the renormalisation `M -> T^{-1/2} M T^{-1/2}` applied to a grid POM.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionCorrection {
    /// `1 - tr[T]/dim`: the average fraction of the identity the raw grid misses.
    pub mean: f64,
    /// `max |lambda(T) - 1|`.
    pub spectral: f64,
    /// Leading number-basis block on which `T` equals the identity to
    /// within the completeness tolerance before correction.
    pub trusted_dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Coherent,
    Imageband,
}

/// Layout and renormaliser of a phase-space POM.
#[derive(Clone, Debug, PartialEq)]
pub struct GridInfo {
    pub spec: GridSpec,
    pub kind: GridKind,
    pub correction: CompletionCorrection,
    /// `T^{-1/2}`.
    pub renormalizer: CMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pom {
    id: String,
    dim: usize,
    outcomes: Vec<PomOutcome>,
    trusted_dim: usize,
    grid: Option<GridInfo>,
}

impl Pom {
    /// Builds a POM and checks positivity and completeness at default tolerances.
    pub fn new(id: impl Into<String>, dim: usize, outcomes: Vec<PomOutcome>) -> Result<Self> {
        let pom = Self::new_unchecked(id, dim, outcomes)?;
        let report = validate(&pom, &Tolerances::default());
        if !report.passed {
            return Err(Error::InvalidPom(report.summary()));
        }
        Ok(pom)
    }

    /// Structural checks only (dimensions, weights); for diagnostics on
    /// possibly invalid input.
    pub fn new_unchecked(
        id: impl Into<String>,
        dim: usize,
        outcomes: Vec<PomOutcome>,
    ) -> Result<Self> {
        if dim == 0 || outcomes.is_empty() {
            return Err(Error::InvalidPom("a POM needs dim > 0 and at least one outcome".into()));
        }
        for (k, o) in outcomes.iter().enumerate() {
            if o.operator.dim() != dim {
                return Err(Error::DimensionMismatch {
                    context: "POM outcome operator",
                    expected: dim,
                    found: o.operator.dim(),
                });
            }
            if !(o.weight > 0.0) || !o.weight.is_finite() {
                return Err(Error::InvalidPom(format!(
                    "outcome {k} has non-positive weight {}",
                    o.weight
                )));
            }
        }
        Ok(Self {
            id: id.into(),
            dim,
            outcomes,
            trusted_dim: dim,
            grid: None,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[PomOutcome] {
        &self.outcomes
    }

    pub fn outcome(&self, k: usize) -> &PomOutcome {
        &self.outcomes[k]
    }

    /// Leading number-basis block on which the POM is a faithful truncation of
    /// its infinite-dimensional counterpart. Equal to `dim` for finite POMs.
    pub fn trusted_dim(&self) -> usize {
        self.trusted_dim
    }

    pub fn grid(&self) -> Option<&GridInfo> {
        self.grid.as_ref()
    }

    /// `sum_k w_k M_k`.
    pub fn completeness_operator(&self) -> CMatrix {
        let mut t = CMatrix::zeros(self.dim, self.dim);
        for o in &self.outcomes {
            t += o.operator.dense().scale(o.weight);
        }
        t
    }

    /// `sum_k w_k f_k M_k`.
    pub fn weighted_sum(&self, values: &[f64]) -> CMatrix {
        let mut t = CMatrix::zeros(self.dim, self.dim);
        for (o, &f) in self.outcomes.iter().zip(values) {
            if f != 0.0 {
                t += o.operator.dense().scale(o.weight * f);
            }
        }
        t
    }

    pub fn is_rank_one_projective(&self, tol: f64) -> bool {
        self.outcomes.iter().all(|o| {
            if (o.weight - 1.0).abs() > tol {
                return false;
            }
            match &o.operator {
                OutcomeOperator::Factored(v) => v.ncols() == 1 && (v.norm() - 1.0).abs() < tol,
                OutcomeOperator::Dense(h) => {
                    let m = h.matrix();
                    (m * m - m).norm() < tol && (h.trace() - 1.0).abs() < tol
                }
            }
        }) && self.outcomes.len() == self.dim
    }

    pub fn to_descriptor(&self) -> PomDescriptor {
        PomDescriptor {
            id: Some(self.id.clone()),
            dim: self.dim,
            outcomes: self
                .outcomes
                .iter()
                .map(|o| OutcomeJson {
                    label: o.label.clone(),
                    value: o.value,
                    weight: o.weight,
                    matrix: flatten(&o.operator.dense()),
                })
                .collect(),
        }
    }

    /// Builds from a descriptor; `strict` additionally requires a valid POM.
    pub fn from_descriptor(desc: &PomDescriptor, strict: bool) -> Result<Self> {
        let mut outcomes = Vec::with_capacity(desc.outcomes.len());
        for o in &desc.outcomes {
            let m = unflatten(desc.dim, &o.matrix)?;
            outcomes.push(PomOutcome::new(
                o.label.clone(),
                o.value,
                o.weight,
                OutcomeOperator::Dense(HermitianOperator::new(m)?),
            ));
        }
        let id = desc.id.clone().unwrap_or_else(|| "pom".to_string());
        if strict {
            Self::new(id, desc.dim, outcomes)
        } else {
            Self::new_unchecked(id, desc.dim, outcomes)
        }
    }
}

/// JSON form of a POM: `{dim, outcomes: [{label, value, weight, matrix}]}`
/// with each matrix as row-major `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PomDescriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub dim: usize,
    pub outcomes: Vec<OutcomeJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeJson {
    pub label: String,
    pub value: OutcomeValue,
    #[serde(default = "unit_weight")]
    pub weight: f64,
    pub matrix: Vec<[f64; 2]>,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pom_id: String,
    pub outcomes: usize,
    pub min_eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    /// `max |(sum_k w_k M_k - 1)_{ij}|`.
    pub completeness_deviation: f64,
    pub positive: bool,
    pub complete: bool,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correction: Option<CompletionCorrection>,
}

impl ValidationReport {
    pub fn summary(&self) -> String {
        format!(
            "min eigenvalue {:.3e}, completeness deviation {:.3e}",
            self.min_eigenvalue, self.completeness_deviation
        )
    }
}

pub fn validate(pom: &Pom, tol: &Tolerances) -> ValidationReport {
    let min_eigenvalues: Vec<f64> = pom.outcomes.iter().map(|o| o.operator.min_eigenvalue()).collect();
    let min_eigenvalue = min_eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let t = pom.completeness_operator() - CMatrix::identity(pom.dim, pom.dim);
    let completeness_deviation = t.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let positive = min_eigenvalue >= -tol.positivity;
    let complete = completeness_deviation <= tol.completeness;
    ValidationReport {
        pom_id: pom.id.clone(),
        outcomes: pom.len(),
        min_eigenvalues,
        min_eigenvalue,
        completeness_deviation,
        positive,
        complete,
        passed: positive && complete,
        correction: pom.grid.as_ref().map(|g| g.correction),
    }
}

/// Projective POM of a Hermitian operator; eigenvalues closer than `1e-9`
/// (relative to the spectral radius) share an eigenspace.
pub fn projective_pom(a: &HermitianOperator) -> Pom {
    let spec = a.eigen();
    let d = a.dim();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| spec.values[i].total_cmp(&spec.values[j]));
    let scale = spec.max().abs().max(spec.min().abs()).max(1.0);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some(g) if (spec.values[i] - spec.values[g[0]]).abs() <= 1e-9 * scale => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let outcomes = groups
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let mean = g.iter().map(|&i| spec.values[i]).sum::<f64>() / g.len() as f64;
            let v = CMatrix::from_fn(d, g.len(), |r, c| spec.vectors[(r, g[c])]);
            PomOutcome::new(format!("e{k}"), OutcomeValue::Scalar(mean), 1.0, OutcomeOperator::Factored(v))
        })
        .collect();
    Pom::new_unchecked("projective", d, outcomes).expect("eigenprojectors are well formed")
}

/// Rank-one projective POM on the orthonormal columns of `basis`.
pub fn basis_pom(basis: &CMatrix, values: &[f64]) -> Result<Pom> {
    let d = basis.nrows();
    if basis.ncols() != d || values.len() != d {
        return Err(Error::DimensionMismatch {
            context: "basis_pom",
            expected: d,
            found: basis.ncols().min(values.len()),
        });
    }
    let outcomes = (0..d)
        .map(|k| {
            PomOutcome::new(
                format!("b{k}"),
                OutcomeValue::Scalar(values[k]),
                1.0,
                OutcomeOperator::Factored(basis.columns(k, 1).into_owned()),
            )
        })
        .collect();
    Pom::new("basis", d, outcomes)
}

/// Coherent-state POM `M_alpha = pi^{-1}|alpha><alpha|` sampled on `grid`.
///
/// Outcome operators are `|alpha><alpha|` (truncated to `fock_dim`) with weight
/// `h^2/pi`, then renormalised symmetrically for exact completeness.
pub fn coherent_pom(fock_dim: usize, grid: GridSpec) -> Result<Pom> {
    coherent_pom_with(fock_dim, grid, &Tolerances::default())
}

pub fn coherent_pom_with(fock_dim: usize, grid: GridSpec, tol: &Tolerances) -> Result<Pom> {
    grid.check()?;
    let p = grid.points_per_axis;
    let mut cols = Vec::with_capacity(grid.len());
    for i in 0..p {
        for j in 0..p {
            let alpha = grid.point(i, j);
            let v = fock::coherent_amplitudes(fock_dim, alpha);
            cols.push((alpha, CMatrix::from_column_slice(fock_dim, 1, v.as_slice())));
        }
    }
    build_grid_pom("coherent", fock_dim, grid, GridKind::Coherent, cols, tol)
}

/// Heterodyne POM `M_alpha = pi^{-1} D(alpha) rho'_i D(alpha)^dagger` for an
/// uncorrelated imageband state `rho_i`, where
/// `rho'_i = sum_{mn} |m><n| (-1)^{m+n} <m|rho_i|n>^*`.
pub fn imageband_pom(fock_dim: usize, grid: GridSpec, imageband: &DensityOperator) -> Result<Pom> {
    imageband_pom_with(fock_dim, grid, imageband, &Tolerances::default())
}

/// The transformed imageband operator `rho'_i`.
pub fn imageband_reflection(imageband: &DensityOperator) -> DensityOperator {
    let m = imageband.matrix();
    let d = m.nrows();
    let out = CMatrix::from_fn(d, d, |r, c| {
        let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
        m[(r, c)].conj() * sign
    });
    DensityOperator::new(out).expect("unitary conjugate of a density operator")
}

pub fn imageband_pom_with(
    fock_dim: usize,
    grid: GridSpec,
    imageband: &DensityOperator,
    tol: &Tolerances,
) -> Result<Pom> {
    grid.check()?;
    let di = imageband.dim();
    if di > fock_dim {
        return Err(Error::DimensionMismatch {
            context: "imageband state larger than signal truncation",
            expected: fock_dim,
            found: di,
        });
    }
    let reflected = imageband_reflection(imageband);
    let spec = reflected.as_hermitian().eigen();
    let kept: Vec<usize> = (0..di).filter(|&j| spec.values[j] > 1e-14).collect();
    let factor = CMatrix::from_fn(di, kept.len(), |r, c| {
        spec.vectors[(r, kept[c])] * spec.values[kept[c]].sqrt()
    });
    let work = Displacer::recommended_dim(grid.max_abs(), fock_dim) + di;
    let displacer = Displacer::new(work);
    let p = grid.points_per_axis;
    let mut cols = Vec::with_capacity(grid.len());
    for i in 0..p {
        for j in 0..p {
            let alpha = grid.point(i, j);
            cols.push((alpha, displacer.displace(alpha, &factor, fock_dim)));
        }
    }
    build_grid_pom("imageband", fock_dim, grid, GridKind::Imageband, cols, tol)
}

fn build_grid_pom(
    id: &str,
    dim: usize,
    grid: GridSpec,
    kind: GridKind,
    cols: Vec<(C64, CMatrix)>,
    tol: &Tolerances,
) -> Result<Pom> {
    let h = grid.spacing();
    let weight = h * h / std::f64::consts::PI;
    let mut t = CMatrix::zeros(dim, dim);
    for (_, v) in &cols {
        t += (v * v.adjoint()).scale(weight);
    }
    let t = HermitianOperator::from_hermitian_parts(t);
    let spec = t.eigen();
    let mean = 1.0 - t.trace() / dim as f64;
    let spectral = (spec.max() - 1.0).abs().max((spec.min() - 1.0).abs());
    if mean.abs() > tol.max_grid_correction || !(spec.min() > 0.0) {
        return Err(Error::GridTooSmall {
            correction: mean.abs().max(if spec.min() > 0.0 { 0.0 } else { 1.0 }),
            limit: tol.max_grid_correction,
        });
    }
    let deviation = t.matrix() - CMatrix::identity(dim, dim);
    let mut trusted_dim = 0;
    let mut running = 0.0_f64;
    for k in 0..dim {
        for l in 0..=k {
            running = running.max(deviation[(k, l)].norm());
        }
        if running > tol.completeness {
            break;
        }
        trusted_dim = k + 1;
    }
    let renormalizer = spec.apply_real(|x| 1.0 / x.sqrt()).into_matrix();
    let outcomes = cols
        .into_iter()
        .enumerate()
        .map(|(k, (alpha, v))| {
            let (i, j) = (k / grid.points_per_axis, k % grid.points_per_axis);
            PomOutcome::new(
                format!("a{i}_{j}"),
                OutcomeValue::Pair([alpha.re, alpha.im]),
                weight,
                OutcomeOperator::Factored(&renormalizer * v),
            )
        })
        .collect();
    let mut pom = Pom::new_unchecked(id, dim, outcomes)?;
    pom.trusted_dim = trusted_dim;
    pom.grid = Some(GridInfo {
        spec: grid,
        kind,
        correction: CompletionCorrection {
            mean,
            spectral,
            trusted_dim,
        },
        renormalizer,
    });
    Ok(pom)
}

const TAIL_LIMIT: f64 = 1e-10;

/// Photodetection with quantum efficiency `eta`:
/// `M_m = sum_r C(m+r, r) eta^m (1-eta)^r |m+r><m+r|`.
///
/// All counts `0..fock_dim` are kept, so completeness is exact on the
/// truncated space. Counts up to `max_count` must have truncated binomial
/// tails (of both the normalisation and the energy moment) below `1e-10`;
/// they form the trusted block.
pub fn inefficient_photon_pom(fock_dim: usize, eta: f64, max_count: usize) -> Result<Pom> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("efficiency {eta} not in (0, 1]")));
    }
    if max_count >= fock_dim {
        return Err(Error::InvalidParameter(format!(
            "max_count {max_count} must be below fock_dim {fock_dim}"
        )));
    }
    let loss = 1.0 - eta;
    let mut outcomes = Vec::with_capacity(fock_dim);
    for m in 0..fock_dim {
        let mut v = CMatrix::zeros(fock_dim, fock_dim - m);
        let mut norm = 0.0;
        let mut moment = 0.0;
        for r in 0..fock_dim - m {
            let c = if loss == 0.0 {
                if r == 0 { 1.0 } else { 0.0 }
            } else {
                (fock::binomial_ln(m + r, r) + m as f64 * eta.ln() + r as f64 * loss.ln()).exp()
            };
            v[(m + r, r)] = C64::new(c.sqrt(), 0.0);
            norm += c;
            moment += (m + r) as f64 * c;
        }
        if m <= max_count && loss > 0.0 {
            // Untruncated: sum_r C eta^m loss^r = 1/eta, and the first moment
            // is m/eta + (m+1) loss/eta^2.
            let exact_norm = 1.0 / eta;
            let exact_moment = m as f64 / eta + (m as f64 + 1.0) * loss / (eta * eta);
            let tail = ((exact_norm - norm) / exact_norm)
                .abs()
                .max(((exact_moment - moment) / exact_moment.max(f64::MIN_POSITIVE)).abs());
            if tail > TAIL_LIMIT {
                return Err(Error::TruncationTail {
                    outcome: m,
                    tail,
                    limit: TAIL_LIMIT,
                });
            }
        }
        outcomes.push(PomOutcome::new(
            format!("n{m}"),
            OutcomeValue::Scalar(m as f64),
            1.0,
            OutcomeOperator::Factored(v),
        ));
    }
    let mut pom = Pom::new("photodetection", fock_dim, outcomes)?;
    pom.trusted_dim = max_count + 1;
    Ok(pom)
}

fn pauli_dot(m: [f64; 3]) -> CMatrix {
    let [x, y, z] = m;
    CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(z, 0.0),
            C64::new(x, -y),
            C64::new(x, y),
            C64::new(-z, 0.0),
        ],
    )
}

/// Spin-1/2 POM `M_m = q_m (1 + sigma . m)`.
pub fn spin_pom(directions: &[[f64; 3]], probs: &[f64]) -> Result<Pom> {
    if directions.len() != probs.len() || directions.is_empty() {
        return Err(Error::SpinPom("need one probability per direction".into()));
    }
    let total: f64 = probs.iter().sum();
    if probs.iter().any(|&q| !(q >= 0.0)) || (total - 1.0).abs() > 1e-10 {
        return Err(Error::SpinPom(format!("probabilities must be non-negative and sum to 1 (sum {total})")));
    }
    let mut first_moment = [0.0; 3];
    for (m, &q) in directions.iter().zip(probs) {
        let len = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
        if len > 1.0 + 1e-12 {
            return Err(Error::SpinPom(format!("direction {m:?} lies outside the Bloch ball")));
        }
        for i in 0..3 {
            first_moment[i] += q * m[i];
        }
    }
    let drift = first_moment.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if drift > 1e-10 {
        return Err(Error::SpinPom(format!("sum q_m m = {first_moment:?} is not zero")));
    }
    let outcomes = directions
        .iter()
        .zip(probs)
        .enumerate()
        .filter(|(_, (_, &q))| q > 0.0)
        .map(|(k, (&m, &q))| {
            let op = (CMatrix::identity(2, 2) + pauli_dot(m)).scale(q);
            PomOutcome::new(
                format!("s{k}"),
                OutcomeValue::Bloch(m),
                1.0,
                OutcomeOperator::Dense(HermitianOperator::from_hermitian_parts(op)),
            )
        })
        .collect();
    Pom::new("spin", 2, outcomes)
}

/// `Lambda = sum_m q_m m m^T` for a spin POM, recovered from its operators
/// (`q_m = tr[M_m]/2`).
pub fn spin_second_moment(pom: &Pom) -> Option<[[f64; 3]; 3]> {
    if pom.dim() != 2 {
        return None;
    }
    let mut lambda = [[0.0; 3]; 3];
    for o in pom.outcomes() {
        let OutcomeValue::Bloch(m) = o.value else {
            return None;
        };
        let q = o.weight * o.operator.trace() / 2.0;
        for i in 0..3 {
            for j in 0..3 {
                lambda[i][j] += q * m[i] * m[j];
            }
        }
    }
    Some(lambda)
}

pub(crate) fn pauli_matrices() -> [CMatrix; 3] {
    [
        pauli_dot([1.0, 0.0, 0.0]),
        pauli_dot([0.0, 1.0, 0.0]),
        pauli_dot([0.0, 0.0, 1.0]),
    ]
}

/// Tetrahedron vertices on the unit sphere.
pub fn tetrahedral_directions() -> Vec<[f64; 3]> {
    let s = 1.0 / 3.0_f64.sqrt();
    vec![[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]]
}

/// Trine directions in the x-z plane, 120 degrees apart.
pub fn trine_directions() -> Vec<[f64; 3]> {
    (0..3)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            [t.sin(), 0.0, t.cos()]
        })
        .collect()
}

/// The qubit trine POM, `q = 1/3` for each of three coplanar directions.
pub fn trine_pom() -> Pom {
    spin_pom(&trine_directions(), &[1.0 / 3.0; 3])
        .expect("trine directions sum to zero")
        .with_id("trine")
}

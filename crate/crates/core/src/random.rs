//! Seeded random instances for the property suites.
//!
//! Every randomized check in the crate draws from [`SuiteRng`] (ChaCha8)
//! so that a recorded seed reproduces a run bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::operator::{CMatrix, CVector, DensityOperator, HermitianOperator, Ket, C64};
use crate::pom::{OutcomeOperator, OutcomeValue, Pom, PomOutcome};

pub type SuiteRng = ChaCha8Rng;

pub const GENERATOR_NAME: &str = "ChaCha8";

pub fn suite_rng(seed: u64) -> SuiteRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Haar-random pure state.
pub fn random_ket<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Ket {
    let v = CVector::from_fn(dim, |_, _| complex_normal(rng));
    Ket::new(v).expect("gaussian vector is non-zero almost surely")
}

/// Hilbert-Schmidt random mixed state of full rank.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityOperator {
    random_density_with_rank(dim, dim, rng)
}

pub fn random_density_with_rank<R: Rng + ?Sized>(
    dim: usize,
    rank: usize,
    rng: &mut R,
) -> DensityOperator {
    let g = ginibre(dim, rank.max(1), rng);
    DensityOperator::from_unnormalized(&g * g.adjoint()).expect("ginibre product is positive")
}

/// Either a pure or a full-rank mixed state, with equal probability.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityOperator {
    if rng.random_bool(0.5) {
        random_ket(dim, rng).projector()
    } else {
        random_density(dim, rng)
    }
}

/// GUE-like Hermitian matrix with entries of order one.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianOperator {
    let g = ginibre(dim, dim, rng);
    HermitianOperator::new((&g + g.adjoint()).scale(0.5)).expect("symmetric by construction")
}

pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(dim, dim, rng);
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // Fix column phases so the distribution is Haar.
    let mut q = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for z in q.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    q
}

/// Random POM with `outcomes` elements of random rank, values drawn from N(0, 1).
///
/// Built as `M_k = S^{-1/2} G_k S^{-1/2}` with `S = sum G_k`, so completeness
/// holds to rounding.
pub fn random_pom<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Pom {
    let mut raw = Vec::with_capacity(outcomes);
    let mut sum = CMatrix::zeros(dim, dim);
    for _ in 0..outcomes {
        let rank = rng.random_range(1..=dim);
        let x = ginibre(dim, rank, rng);
        let g = &x * x.adjoint();
        sum += &g;
        raw.push(g);
    }
    let inv_sqrt = HermitianOperator::new(sum)
        .expect("sum of positive matrices")
        .eigen()
        .apply_real(|x| 1.0 / x.sqrt());
    let s = inv_sqrt.matrix();
    let items = raw
        .into_iter()
        .enumerate()
        .map(|(k, g)| {
            let m = s * g * s;
            PomOutcome::new(
                format!("m{k}"),
                OutcomeValue::Scalar(rng.sample(StandardNormal)),
                1.0,
                OutcomeOperator::Dense(HermitianOperator::from_hermitian_parts(m)),
            )
        })
        .collect();
    Pom::new("random", dim, items).expect("normalised by construction")
}

/// Random values for an estimator, drawn from N(0, scale^2).
pub fn random_values<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let a = random_density(3, &mut suite_rng(7));
        let b = random_density(3, &mut suite_rng(7));
        assert_eq!(a, b);
    }

    #[test]
    fn unitary_is_unitary() {
        let u = random_unitary(4, &mut suite_rng(1));
        assert!((&u * u.adjoint() - CMatrix::identity(4, 4)).norm() < 1e-12);
    }
}

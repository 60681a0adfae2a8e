//! Single-mode operators and states in a truncated number basis.

use crate::operator::{CMatrix, CVector, DensityOperator, HermitianOperator, Ket, Spectrum, C64};
use crate::operator::{eigen_hermitian, ZERO};

/// Lowering operator `a` truncated to `dim` levels.
pub fn annihilation(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn number(dim: usize) -> HermitianOperator {
    let diag: Vec<f64> = (0..dim).map(|n| n as f64).collect();
    HermitianOperator::from_real_diagonal(&diag)
}

/// `X1 = (a + a^dagger)/2`.
pub fn quadrature_x1(dim: usize) -> HermitianOperator {
    let a = annihilation(dim);
    HermitianOperator::from_hermitian_parts((&a + a.adjoint()).scale(0.5))
}

/// `X2 = (a - a^dagger)/(2i)`.
pub fn quadrature_x2(dim: usize) -> HermitianOperator {
    let a = annihilation(dim);
    let m = (&a - a.adjoint()) * C64::new(0.0, -0.5);
    HermitianOperator::from_hermitian_parts(m)
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Number-basis amplitudes `<n|alpha>` for `n < dim`, exactly as in the
/// infinite space (so the result is not renormalised after truncation).
pub fn coherent_amplitudes(dim: usize, alpha: C64) -> CVector {
    let mut v = CVector::zeros(dim);
    let r2 = alpha.norm_sqr();
    if r2 == 0.0 {
        v[0] = C64::new(1.0, 0.0);
        return v;
    }
    let ln_r = alpha.norm().ln();
    let theta = alpha.arg();
    let mut ln_fact = 0.0;
    for n in 0..dim {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let modulus = (-0.5 * r2 + n as f64 * ln_r - 0.5 * ln_fact).exp();
        v[n] = C64::from_polar(modulus, n as f64 * theta);
    }
    v
}

/// Normalised truncated coherent state.
pub fn coherent_state(dim: usize, alpha: C64) -> Ket {
    Ket::new(coherent_amplitudes(dim, alpha)).expect("coherent amplitudes are non-zero")
}

pub fn number_state(dim: usize, n: usize) -> Ket {
    Ket::basis(dim, n)
}

pub fn vacuum(dim: usize) -> DensityOperator {
    number_state(dim, 0).projector()
}

/// Displacement operators `D(alpha) = exp(alpha a^dagger - alpha* a)` built
/// in an enlarged truncation and read back on a smaller one.
///
/// The generator is diagonalised once: with `K = i (a^dagger - a)` Hermitian,
/// `D(alpha) = U_theta exp(-i |alpha| K) U_theta^dagger`, `U_theta = exp(i theta N)`.
#[derive(Clone, Debug)]
pub struct Displacer {
    work_dim: usize,
    spectrum: Spectrum,
}

impl Displacer {
    /// `work_dim` should be at least `(max|alpha| + 4)^2` for the displacements
    /// that will be requested.
    pub fn new(work_dim: usize) -> Self {
        let a = annihilation(work_dim);
        let k = (a.adjoint() - &a) * C64::new(0.0, 1.0);
        Self {
            work_dim,
            spectrum: eigen_hermitian(&k),
        }
    }

    pub fn recommended_dim(max_abs_alpha: f64, min_dim: usize) -> usize {
        let d = (max_abs_alpha + 4.0).powi(2).ceil() as usize;
        d.max(min_dim)
    }

    pub fn work_dim(&self) -> usize {
        self.work_dim
    }

    /// Full displacement matrix in the working truncation.
    pub fn matrix(&self, alpha: C64) -> CMatrix {
        let r = alpha.norm();
        let theta = alpha.arg();
        let core = self.spectrum.apply_complex(|k| C64::from_polar(1.0, -r * k));
        CMatrix::from_fn(self.work_dim, self.work_dim, |m, n| {
            core[(m, n)] * C64::from_polar(1.0, theta * (m as f64 - n as f64))
        })
    }

    /// `D(alpha) * cols`, keeping only the first `out_dim` rows. `cols` lives in
    /// the number basis with at most `work_dim` rows.
    pub fn displace(&self, alpha: C64, cols: &CMatrix, out_dim: usize) -> CMatrix {
        let r = alpha.norm();
        let theta = alpha.arg();
        let v = &self.spectrum.vectors;
        let mut out = CMatrix::zeros(out_dim, cols.ncols());
        let mut work = CVector::zeros(self.work_dim);
        for c in 0..cols.ncols() {
            // w = diag(e^{-i r k}) V^dagger U_theta^dagger col
            work.fill(ZERO);
            for j in 0..self.work_dim {
                let mut acc = ZERO;
                for n in 0..cols.nrows() {
                    let x = cols[(n, c)];
                    if x != ZERO {
                        acc += v[(n, j)].conj() * x * C64::from_polar(1.0, -theta * n as f64);
                    }
                }
                work[j] = acc * C64::from_polar(1.0, -r * self.spectrum.values[j]);
            }
            for m in 0..out_dim {
                let mut acc = ZERO;
                for j in 0..self.work_dim {
                    acc += v[(m, j)] * work[j];
                }
                out[(m, c)] = acc * C64::from_polar(1.0, theta * m as f64);
            }
        }
        out
    }
}

pub(crate) fn binomial_ln(n: usize, k: usize) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `<n|D(alpha)|m>` from the associated Laguerre closed form.
    fn displaced_element(n: usize, m: usize, alpha: C64) -> C64 {
        let (big, small, z) = if n >= m { (n, m, alpha) } else { (m, n, -alpha.conj()) };
        let x = alpha.norm_sqr();
        let k = big - small;
        // L_small^{(k)}(x) by the three-term recurrence.
        let mut l_prev = 1.0;
        let mut l = 1.0 + k as f64 - x;
        let lag = if small == 0 {
            1.0
        } else {
            for j in 1..small {
                let jf = j as f64;
                let next = ((2.0 * jf + 1.0 + k as f64 - x) * l - (jf + k as f64) * l_prev) / (jf + 1.0);
                l_prev = l;
                l = next;
            }
            l
        };
        let pref = (0.5 * (ln_factorial(small) - ln_factorial(big)) - 0.5 * x).exp();
        z.powu(k as u32) * pref * lag
    }

    #[test]
    fn quadrature_commutator_is_i_over_2_on_low_levels() {
        let d = 12;
        let c = quadrature_x1(d).commutator(&quadrature_x2(d));
        for n in 0..d - 1 {
            assert!((c[(n, n)] - C64::new(0.0, 0.5)).norm() < 1e-14);
        }
    }

    #[test]
    fn coherent_amplitudes_normalised_when_untruncated() {
        let v = coherent_amplitudes(60, C64::new(1.2, -0.7));
        assert!((v.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn displacement_of_vacuum_is_coherent_state() {
        let disp = Displacer::new(Displacer::recommended_dim(3.0, 20));
        let alpha = C64::new(2.0, -2.2);
        let vac = CMatrix::from_fn(1, 1, |_, _| C64::new(1.0, 0.0));
        let got = disp.displace(alpha, &vac, 20);
        let want = coherent_amplitudes(20, alpha);
        for n in 0..20 {
            assert!((got[(n, 0)] - want[n]).norm() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn displaced_number_state_matches_laguerre_form() {
        let disp = Displacer::new(Displacer::recommended_dim(2.0, 10));
        let alpha = C64::new(-1.1, 1.4);
        let one = CMatrix::from_fn(2, 1, |n, _| if n == 1 { C64::new(1.0, 0.0) } else { ZERO });
        let got = disp.displace(alpha, &one, 10);
        for n in 0..10 {
            let want = displaced_element(n, 1, alpha);
            assert!((got[(n, 0)] - want).norm() < 1e-12, "n={n}: {} vs {}", got[(n, 0)], want);
        }
        let full = disp.matrix(alpha);
        for n in 0..10 {
            assert!((full[(n, 1)] - got[(n, 0)]).norm() < 1e-13);
        }
    }
}

//! Linear combination of unitaries for the one-step transition matrix.
//!
//! A matrix with `||A|| <= 1` is split into its Hermitian parts
//! `A = B + iC` with `B = (A + A^dagger)/2` and `C = (A - A^dagger)/(2i)`, and
//! each part into two unitaries:
//!
//! ```text
//! F1 = B + i sqrt(I - B^2)    F2 = B - i sqrt(I - B^2)
//! F3 = iC - sqrt(I - C^2)     F4 = iC + sqrt(I - C^2)
//! ```
//!
//! so that `(F1 + F2)/2 = B`, `(F3 + F4)/2 = iC` and `(F1 + F2 + F3 + F4)/2 = A`.
//!
//! The SMCM transition matrix is column-stochastic but not a contraction in
//! general (its norm is `1 + O(dt)`). [`decompose_rescaled`] therefore encodes
//! `A / ||A||` and records the scale; the fraction readout renormalizes onto
//! the simplex, which removes any positive overall factor exactly.

use num_complex::Complex64;

use crate::cloud::StochasticMatrix;
use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, sqrt_psd, ComplexMatrix, RealSymMatrix};

/// Allowed excess of `||A||` over 1 before the decomposition is refused.
pub const NORM_TOL: f64 = 1e-8;
/// Allowed excess of `||B||`, `||C||` over 1 in [`build_unitaries`].
pub const PART_NORM_TOL: f64 = 1e-9;

/// `B = (A + A^dagger)/2` (real symmetric) and `C = (A - A^dagger)/(2i)`.
///
/// Only real `A` is supported; then `C` is Hermitian with purely imaginary
/// entries and `C^2` is real symmetric.
pub fn split_hermitian(a: &ComplexMatrix) -> Result<(RealSymMatrix, ComplexMatrix)> {
    let im = a.max_abs_imag();
    if im != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "only real matrices can be decomposed (imaginary part {im:e})"
        )));
    }
    let adj = a.adjoint();
    let b = (a + &adj).scale(Complex64::new(0.5, 0.0)).to_real_symmetric()?;
    // 1/(2i) = -i/2
    let c = (a - &adj).scale(Complex64::new(0.0, -0.5));
    Ok((b, c))
}

/// The four unitaries built from the Hermitian parts.
pub fn build_unitaries(b: &RealSymMatrix, c: &ComplexMatrix) -> Result<[ComplexMatrix; 4]> {
    let n = b.dim();
    let not_sub_normalized = |norm: f64| move |_| Error::NotSubNormalized(norm);

    let b_norm = spectral_norm(&b.to_complex());
    if b_norm > 1.0 + PART_NORM_TOL {
        return Err(Error::NotSubNormalized(b_norm));
    }
    let c_norm = spectral_norm(c);
    if c_norm > 1.0 + PART_NORM_TOL {
        return Err(Error::NotSubNormalized(c_norm));
    }

    let root_b = sqrt_psd(&b.square().identity_minus())
        .map_err(not_sub_normalized(b_norm))?
        .to_complex();
    let c_sq = (c * c).to_real_symmetric()?;
    let root_c = sqrt_psd(&c_sq.identity_minus())
        .map_err(not_sub_normalized(c_norm))?
        .to_complex();

    let b = b.to_complex();
    let i = Complex64::i();
    let i_root_b = root_b.scale(i);
    let i_c = c.scale(i);
    debug_assert_eq!(i_c.dim(), n);
    Ok([
        &b + &i_root_b,
        &b - &i_root_b,
        &i_c - &root_c,
        &i_c + &root_c,
    ])
}

/// Complete decomposition of an encoded matrix `A / scale`.
#[derive(Clone, Debug)]
pub struct LcuDecomposition {
    source: ComplexMatrix,
    scale: f64,
    b: RealSymMatrix,
    c: ComplexMatrix,
    unitaries: [ComplexMatrix; 4],
}

impl LcuDecomposition {
    /// The matrix handed to [`decompose`] / [`decompose_rescaled`].
    pub fn source(&self) -> &ComplexMatrix {
        &self.source
    }

    /// Factor the source was divided by before decomposition (1 when the
    /// source was already a contraction).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// The matrix actually realized: `source / scale`.
    pub fn encoded(&self) -> ComplexMatrix {
        self.source.scale(Complex64::new(1.0 / self.scale, 0.0))
    }

    pub fn b(&self) -> &RealSymMatrix {
        &self.b
    }

    pub fn c(&self) -> &ComplexMatrix {
        &self.c
    }

    pub fn unitaries(&self) -> &[ComplexMatrix; 4] {
        &self.unitaries
    }

    /// `F_j` for `j` in `1..=4`.
    pub fn f(&self, j: usize) -> &ComplexMatrix {
        &self.unitaries[j - 1]
    }

    /// `(F1 + F2 + F3 + F4) / 2`.
    pub fn recombined(&self) -> ComplexMatrix {
        let [f1, f2, f3, f4] = &self.unitaries;
        (&(&(f1 + f2) + f3) + f4).scale(Complex64::new(0.5, 0.0))
    }

    /// Max-abs residual of `(F1 + F2 + F3 + F4)/2` against the encoded matrix.
    pub fn reconstruction_residual(&self) -> f64 {
        self.recombined().max_abs_diff(&self.encoded())
    }

    /// Largest max-abs deviation of `F_j F_j^dagger` from the identity.
    pub fn unitarity_residual(&self) -> f64 {
        self.unitaries
            .iter()
            .map(ComplexMatrix::unitarity_residual)
            .fold(0.0, f64::max)
    }
}

fn decompose_scaled(a: &ComplexMatrix, scale: f64) -> Result<LcuDecomposition> {
    let encoded = a.scale(Complex64::new(1.0 / scale, 0.0));
    let (b, c) = split_hermitian(&encoded)?;
    let unitaries = build_unitaries(&b, &c)?;
    Ok(LcuDecomposition {
        source: a.clone(),
        scale,
        b,
        c,
        unitaries,
    })
}

/// Decomposes `a` as is; refuses matrices with spectral norm above
/// `1 + NORM_TOL`.
pub fn decompose(a: &ComplexMatrix) -> Result<LcuDecomposition> {
    let norm = spectral_norm(a);
    if norm > 1.0 + NORM_TOL {
        return Err(Error::NotSubNormalized(norm));
    }
    decompose_scaled(a, 1.0)
}

/// Decomposes `a / max(1, ||a||)`.
pub fn decompose_rescaled(a: &ComplexMatrix) -> Result<LcuDecomposition> {
    let norm = spectral_norm(a);
    if !norm.is_finite() {
        return Err(Error::NonFinite {
            what: "spectral norm",
            value: norm,
        });
    }
    decompose_scaled(a, norm.max(1.0))
}

/// LCU of a one-step transition matrix, rescaled when it is not a contraction.
pub fn decompose_transition(p: &StochasticMatrix) -> Result<LcuDecomposition> {
    decompose_rescaled(&p.to_complex())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::{transition_matrix, transition_rates, EnvParams, TimescaleTable};

    fn reference_matrix() -> StochasticMatrix {
        let rates = transition_rates(&EnvParams::reference(), &TimescaleTable::reference());
        transition_matrix(&rates, 0.1).unwrap()
    }

    #[test]
    fn identity_parts() {
        let (b, c) = split_hermitian(&ComplexMatrix::identity(4)).unwrap();
        assert_eq!(b, RealSymMatrix::identity(4));
        assert_eq!(c, ComplexMatrix::zeros(4));
        let [f1, f2, f3, f4] = build_unitaries(&b, &c).unwrap();
        let id = ComplexMatrix::identity(4);
        let minus = id.scale(Complex64::new(-1.0, 0.0));
        assert!(f1.max_abs_diff(&id) < 1e-15);
        assert!(f2.max_abs_diff(&id) < 1e-15);
        assert!(f3.max_abs_diff(&minus) < 1e-15);
        assert!(f4.max_abs_diff(&id) < 1e-15);
        let lcu = decompose(&id).unwrap();
        assert_eq!(lcu.reconstruction_residual(), 0.0);
    }

    #[test]
    fn zero_matrix_parts() {
        let z = ComplexMatrix::zeros(4);
        let (b, c) = split_hermitian(&z).unwrap();
        let [f1, f2, f3, f4] = build_unitaries(&b, &c).unwrap();
        let id = ComplexMatrix::identity(4);
        assert!(f1.max_abs_diff(&id.scale(Complex64::i())) < 1e-15);
        assert!(f2.max_abs_diff(&id.scale(-Complex64::i())) < 1e-15);
        assert!(f3.max_abs_diff(&id.scale(Complex64::new(-1.0, 0.0))) < 1e-15);
        assert!(f4.max_abs_diff(&id) < 1e-15);
        let sum = &(&(&f1 + &f2) + &f3) + &f4;
        assert!(sum.max_abs_diff(&z) < 1e-15);
    }

    #[test]
    fn symmetric_input_has_zero_c() {
        let a = ComplexMatrix::from_real_rows(&[vec![0.5, 0.25], vec![0.25, 0.5]]);
        let (_, c) = split_hermitian(&a).unwrap();
        assert_eq!(c, ComplexMatrix::zeros(2));
    }

    #[test]
    fn reference_matrix_recombines() {
        let a = reference_matrix().to_complex();
        let (b, c) = split_hermitian(&a).unwrap();
        let recombined = &b.to_complex() + &c.scale(Complex64::i());
        assert!(recombined.max_abs_diff(&a) < 1e-14);
    }

    #[test]
    fn reference_matrix_is_not_a_contraction() {
        // ||A|| = 1.0030831419... at dt = 0.1 h (numpy.linalg.norm(A, 2)).
        let a = reference_matrix().to_complex();
        let norm = spectral_norm(&a);
        assert!((norm - 1.003_083_141_913_077).abs() < 1e-10);
        assert!(matches!(decompose(&a), Err(Error::NotSubNormalized(_))));

        let lcu = decompose_transition(&reference_matrix()).unwrap();
        assert!((lcu.scale() - norm).abs() < 1e-15);
        assert!(lcu.reconstruction_residual() < 1e-10);
        assert!(lcu.unitarity_residual() < 1e-9);
        let back = lcu.recombined().scale(Complex64::new(lcu.scale(), 0.0));
        assert!(back.max_abs_diff(&a) < 1e-10);
    }

    #[test]
    fn twice_identity_is_refused() {
        let a = ComplexMatrix::identity(4).scale(Complex64::new(2.0, 0.0));
        match decompose(&a) {
            Err(Error::NotSubNormalized(n)) => assert!((n - 2.0).abs() < 1e-12),
            other => panic!("expected sub-normalization error, got {other:?}"),
        }
    }

    #[test]
    fn pair_identities() {
        let lcu = decompose_transition(&reference_matrix()).unwrap();
        let half = Complex64::new(0.5, 0.0);
        let b_sum = (lcu.f(1) + lcu.f(2)).scale(half);
        let c_sum = (lcu.f(3) + lcu.f(4)).scale(half);
        assert!(b_sum.max_abs_diff(&lcu.b().to_complex()) < 1e-9);
        assert!(c_sum.max_abs_diff(&lcu.c().scale(Complex64::i())) < 1e-9);
        assert!(lcu.f(1).max_abs_diff(&lcu.f(2).adjoint()) < 1e-12);
        let f12 = lcu.f(1) * lcu.f(2);
        let f21 = lcu.f(2) * lcu.f(1);
        assert!(f12.max_abs_diff(&f21) < 1e-9);
    }
}

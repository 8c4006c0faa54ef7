//! Small dense linear algebra: symmetric eigendecomposition by cyclic Jacobi
//! rotations, principal square roots of PSD matrices, spectral norms and the
//! Householder completion of a unit vector to an orthogonal matrix.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalues down to `-PSD_CLAMP` are treated as round-off and clamped to 0.
pub const PSD_CLAMP: f64 = 1e-10;

const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense real symmetric matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct RealSymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl RealSymMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::InvalidParameter("matrix is not square".into()));
            }
            data.extend_from_slice(row);
        }
        Self::from_data(n, data)
    }

    fn from_data(n: usize, data: Vec<f64>) -> Result<Self> {
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "matrix entry",
                value: *bad,
            });
        }
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                asym = asym.max((data[i * n + j] - data[j * n + i]).abs());
            }
        }
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        let mut m = Self { n, data };
        m.symmetrize();
        Ok(m)
    }

    fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in i + 1..n {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg;
            }
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m.data[i * d.len() + i] = *v;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// `S * S`, symmetric again.
    pub fn square(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = (0..n).map(|k| self.get(i, k) * self.get(k, j)).sum();
            }
        }
        out.symmetrize();
        out
    }

    /// `I - S`.
    pub fn identity_minus(&self) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = -*v);
        for i in 0..self.n {
            out.data[i * self.n + i] += 1.0;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &RealSymMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix {
            n: self.n,
            data: self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }
}

impl fmt::Debug for RealSymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.n)).finish()
    }
}

/// Eigenpairs of a real symmetric matrix, eigenvalues descending and
/// eigenvectors stored as the columns of `vectors` (row-major).
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V * diag(f(lambda)) * V^T`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> RealSymMatrix {
        let n = self.dim();
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = RealSymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = (0..n)
                    .map(|k| self.vectors[i][k] * mapped[k] * self.vectors[j][k])
                    .sum();
                out.data[i * n + j] = v;
                out.data[j * n + i] = v;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> RealSymMatrix {
        self.map_spectrum(|l| l)
    }
}

/// Cyclic Jacobi eigensolver.
pub fn jacobi_eigh(s: &RealSymMatrix) -> Result<EigenDecomposition> {
    let n = s.n;
    let mut a: Vec<Vec<f64>> = s.data.chunks(n.max(1)).map(|r| r.to_vec()).collect();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale = s.data.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let tol = JACOBI_TOL * scale;

    let off_max = |a: &[Vec<f64>]| {
        let mut m = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                m = m.max(a[i][j].abs());
            }
        }
        m
    };

    let mut sweeps = 0;
    loop {
        let off = off_max(&a);
        if off < tol {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq.abs() < tol * 1e-3 {
                    continue;
                }
                // Rutishauser's stable rotation: t = tan(theta) with |theta| <= pi/4.
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - sn * akq;
                    a[k][q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - sn * aqk;
                    a[q][k] = sn * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - sn * vkq;
                    row[q] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = (0..n)
        .map(|row| order.iter().map(|&col| v[row][col]).collect())
        .collect();
    Ok(EigenDecomposition { values, vectors })
}

/// Principal square root of a positive semidefinite matrix.
pub fn sqrt_psd(s: &RealSymMatrix) -> Result<RealSymMatrix> {
    let eig = jacobi_eigh(s)?;
    if let Some(&min) = eig.values.last() {
        if min < -PSD_CLAMP {
            return Err(Error::NotPsd(min));
        }
    }
    Ok(eig.map_spectrum(|l| l.max(0.0).sqrt()))
}

/// Dense complex square matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::InvalidParameter("matrix is not square".into()));
            }
            for z in row {
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite {
                        what: "matrix entry",
                        value: if z.re.is_finite() { z.im } else { z.re },
                    });
                }
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&v| Complex64::new(v, 0.0)))
            .collect();
        Self { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.data
            .chunks(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    /// Max-abs deviation of `M M^dagger` from the identity.
    pub fn unitarity_residual(&self) -> f64 {
        (self * &self.adjoint()).max_abs_diff(&Self::identity(self.n))
    }

    /// Real part as a symmetric matrix; fails if the imaginary part or the
    /// asymmetry exceed the symmetry tolerance.
    pub fn to_real_symmetric(&self) -> Result<RealSymMatrix> {
        let im = self.max_abs_imag();
        if im > SYMMETRY_TOL {
            return Err(Error::InvalidParameter(format!(
                "matrix has imaginary part {im:e}; only real symmetric operands are supported"
            )));
        }
        RealSymMatrix::from_data(self.n, self.data.iter().map(|z| z.re).collect())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let n = self.n;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        ComplexMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        ComplexMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.n)).finish()
    }
}

/// Largest singular value: square root of the top eigenvalue of `A^dagger A`.
///
/// A Hermitian `H = X + iY` is handled through its real symmetric embedding
/// `[[X, -Y], [Y, X]]`, which has the same spectrum with doubled multiplicity.
pub fn spectral_norm(a: &ComplexMatrix) -> f64 {
    let gram = &a.adjoint() * a;
    let n = gram.n;
    let embedded = if gram.max_abs_imag() == 0.0 {
        RealSymMatrix::from_data(n, gram.data.iter().map(|z| z.re).collect())
    } else {
        let m = 2 * n;
        let mut data = vec![0.0; m * m];
        for i in 0..n {
            for j in 0..n {
                let z = gram[(i, j)];
                data[i * m + j] = z.re;
                data[(i + n) * m + j + n] = z.re;
                data[i * m + j + n] = -z.im;
                data[(i + n) * m + j] = z.im;
            }
        }
        RealSymMatrix::from_data(m, data)
    };
    let top = embedded
        .and_then(|g| jacobi_eigh(&g))
        .map(|e| e.values.first().copied().unwrap_or(0.0))
        .unwrap_or(f64::NAN);
    top.max(0.0).sqrt()
}

/// Real orthogonal matrix whose first column is the unit vector `v`.
///
/// Built as the Householder reflection exchanging `e0` and `v`; the identity
/// when `v` already equals `e0`.
pub fn unitary_completion(v: &[f64]) -> Result<ComplexMatrix> {
    let n = v.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty vector".into()));
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            what: "vector entry",
            value: *bad,
        });
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized(norm));
    }

    let mut w: Vec<f64> = v.iter().map(|x| -x).collect();
    w[0] += 1.0;
    let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut rows = vec![vec![0.0; n]; n];
    if wn < 1e-15 {
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = 1.0;
        }
    } else {
        w.iter_mut().for_each(|x| *x /= wn);
        for i in 0..n {
            for j in 0..n {
                let delta = if i == j { 1.0 } else { 0.0 };
                rows[i][j] = delta - 2.0 * w[i] * w[j];
            }
        }
        // Mathematically identical to the reflected column; pinned to avoid
        // round-off in the prepared amplitudes.
        for (row, &vi) in rows.iter_mut().zip(v) {
            row[0] = vi;
        }
    }
    Ok(ComplexMatrix::from_real_rows(&rows))
}

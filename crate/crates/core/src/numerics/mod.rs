// Copyright 2026 EEQT Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex linear algebra, tolerances and random streams.

mod expm;
mod rng;

pub use expm::{matexp, one_norm};
pub use rng::{DrawKind, RngStream};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Environment variable holding a JSON object that overrides tolerance defaults.
pub const TOLERANCE_ENV: &str = "EEQT_DEFAULT_TOL";

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    pub hermiticity: f64,
    pub normalization: f64,
    /// Magnitude of the most negative eigenvalue still accepted as PSD.
    pub positivity: f64,
    pub ode_step: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            hermiticity: 1e-10,
            normalization: 1e-10,
            positivity: 1e-10,
            ode_step: 0.01,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(self) -> Result<Self> {
        let fields = [
            ("hermiticity", self.hermiticity),
            ("normalization", self.normalization),
            ("positivity", self.positivity),
            ("ode_step", self.ode_step),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "tolerance {name} must be positive, got {v}"
                )));
            }
        }
        Ok(self)
    }

    /// Parses an override object such as `{"hermiticity": 1e-8}`; missing
    /// fields keep their defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ToleranceConfig = serde_json::from_str(text)?;
        cfg.validate()
    }

    /// Defaults, overridden by `EEQT_DEFAULT_TOL` when set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(TOLERANCE_ENV) {
            Ok(text) if !text.trim().is_empty() => Self::from_json(&text),
            _ => Ok(Self::default()),
        }
    }
}

pub fn require_square(m: &CMatrix, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// `max |M_ij - conj(M_ji)|`.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows().min(m.ncols());
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && hermiticity_deviation(m) <= tol
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenvalues of a Hermitian matrix (its Hermitian part is used).
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect()
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// `½ Σ |eig(ρ − σ)|`.
pub fn trace_distance(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    trace_distance_with_tol(rho, sigma, ToleranceConfig::default().hermiticity)
}

pub fn trace_distance_with_tol(rho: &CMatrix, sigma: &CMatrix, herm_tol: f64) -> Result<f64> {
    if rho.shape() != sigma.shape() || !rho.is_square() {
        return Err(Error::Dimension(format!(
            "trace distance of {:?} and {:?}",
            rho.shape(),
            sigma.shape()
        )));
    }
    for m in [rho, sigma] {
        let deviation = hermiticity_deviation(m);
        if deviation > herm_tol {
            return Err(Error::NotHermitian { deviation });
        }
    }
    let diff = rho - sigma;
    Ok(0.5
        * hermitian_eigenvalues(&diff)
            .iter()
            .map(|e| e.abs())
            .sum::<f64>())
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().sum()
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// `|ψ⟩⟨ψ|` (no normalization).
pub fn outer(psi: &CVector) -> CMatrix {
    psi * psi.adjoint()
}

/// `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`.
pub fn projector(psi: &CVector) -> Result<CMatrix> {
    let n2 = psi.norm_squared();
    if n2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(outer(psi).unscale(n2))
}

pub fn normalized(psi: &CVector) -> Result<CVector> {
    let n = psi.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(psi.unscale(n))
}

/// `⟨ψ|M|ψ⟩ / ⟨ψ|ψ⟩`.
pub fn expectation(m: &CMatrix, psi: &CVector) -> Result<Complex64> {
    let n2 = psi.norm_squared();
    if n2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(psi.dotc(&(m * psi)) / n2)
}

pub fn check_normalized(psi: &CVector, tol: f64) -> Result<()> {
    let norm_sq = psi.norm_squared();
    if (norm_sq - 1.0).abs() > tol {
        return Err(Error::NotNormalized { norm_sq });
    }
    Ok(())
}

/// Row-major constructor for literals in code and tests.
pub fn cmatrix(rows: usize, cols: usize, entries: &[(f64, f64)]) -> CMatrix {
    let data: Vec<Complex64> = entries.iter().map(|&(re, im)| c64(re, im)).collect();
    CMatrix::from_row_slice(rows, cols, &data)
}

pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    let data: Vec<Complex64> = entries.iter().map(|&re| c64(re, 0.0)).collect();
    CMatrix::from_row_slice(rows, cols, &data)
}

pub fn cvector(entries: &[(f64, f64)]) -> CVector {
    CVector::from_iterator(entries.len(), entries.iter().map(|&(re, im)| c64(re, im)))
}

pub fn real_vector(entries: &[f64]) -> CVector {
    CVector::from_iterator(entries.len(), entries.iter().map(|&re| c64(re, 0.0)))
}

pub mod pauli {
    use super::{cmatrix, CMatrix};

    pub fn x() -> CMatrix {
        cmatrix(2, 2, &[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (0.0, 0.0)])
    }

    pub fn y() -> CMatrix {
        cmatrix(2, 2, &[(0.0, 0.0), (0.0, -1.0), (0.0, 1.0), (0.0, 0.0)])
    }

    pub fn z() -> CMatrix {
        cmatrix(2, 2, &[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (-1.0, 0.0)])
    }

    /// `|0⟩⟨1|`, i.e. the matrix (0,1;0,0).
    pub fn lowering() -> CMatrix {
        cmatrix(2, 2, &[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0), (0.0, 0.0)])
    }
}

/// Random draws of matrices and vectors, shared by tests and the `verify`
/// sweeps.
pub mod random {
    use super::{c64, CMatrix, CVector, RngStream};

    pub fn complex_matrix(rng: &mut RngStream, rows: usize, cols: usize, scale: f64) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            c64(rng.standard_normal(), rng.standard_normal()) * scale
        })
    }

    pub fn hermitian(rng: &mut RngStream, n: usize, scale: f64) -> CMatrix {
        let g = complex_matrix(rng, n, n, scale);
        (&g + g.adjoint()).scale(0.5)
    }

    pub fn unit_vector(rng: &mut RngStream, n: usize) -> CVector {
        let v = CVector::from_fn(n, |_, _| c64(rng.standard_normal(), rng.standard_normal()));
        let norm = v.norm();
        v.unscale(norm)
    }

    /// Random density matrix `G G* / Tr(G G*)` of the given total weight.
    pub fn density(rng: &mut RngStream, n: usize, weight: f64) -> CMatrix {
        let g = complex_matrix(rng, n, n, 1.0);
        let rho = &g * g.adjoint();
        let tr = rho.diagonal().iter().map(|z| z.re).sum::<f64>();
        rho.scale(weight / tr)
    }

    /// A unit vector orthogonal to `psi` (needs `psi.len() >= 2`).
    pub fn orthogonal_unit(rng: &mut RngStream, psi: &CVector) -> CVector {
        loop {
            let v = unit_vector(rng, psi.len());
            let w = &v - psi * psi.dotc(&v);
            let n = w.norm();
            if n > 1e-3 {
                return w.unscale(n);
            }
        }
    }
}

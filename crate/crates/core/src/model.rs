// Copyright 2026 EEQT Contributors
// SPDX-License-Identifier: Apache-2.0

//! Hybrid (classical sectors coupled to a quantum system) and plain Lindblad
//! models, their Liouville/Heisenberg generators, and exact propagation by
//! exponentiating the superoperator.
//!
//! All sector indices are 0-based. With ħ = 1 the hybrid state equation is
//!
//! ```text
//! dρ_α/dt = -i[H_α, ρ_α] + Σ_β g_αβ ρ_β g_αβ* - ½{Λ_α, ρ_α},   Λ_α = Σ_β g_βα* g_βα
//! ```
//!
//! and the observable equation is its dual
//!
//! ```text
//! dA_α/dt = i[H_α, A_α] + Σ_β g_βα* A_β g_βα - ½{Λ_α, A_α}.
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{
    anticommutator, c64, check_normalized, commutator, hermitian_eigenvalues,
    hermiticity_deviation, matexp, outer, require_square, trace, trace_product, CMatrix, CVector,
    ToleranceConfig,
};

/// A block-diagonal matrix, one block per classical sector. Used for
/// densities, observables and their time derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    pub blocks: Vec<CMatrix>,
}

/// Statistical state of the total system: `diag(ρ_1, …, ρ_m)`.
pub type BlockDensity = BlockMatrix;

impl BlockMatrix {
    pub fn new(blocks: Vec<CMatrix>) -> Self {
        Self { blocks }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Self::new(dims.iter().map(|&n| CMatrix::zeros(n, n)).collect())
    }

    pub fn identity(dims: &[usize]) -> Self {
        Self::new(dims.iter().map(|&n| CMatrix::identity(n, n)).collect())
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    pub fn trace(&self) -> Complex64 {
        self.blocks.iter().map(trace).sum()
    }

    /// `Tr(A·B)` for block-diagonal `A` and `B`.
    pub fn trace_product(&self, other: &BlockMatrix) -> Complex64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| trace_product(a, b))
            .sum()
    }

    pub fn check_shape(&self, dims: &[usize]) -> Result<()> {
        let ok = self.blocks.len() == dims.len()
            && self
                .blocks
                .iter()
                .zip(dims)
                .all(|(b, &n)| b.nrows() == n && b.ncols() == n);
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "block shapes {:?} do not match sector dimensions {:?}",
                self.blocks.iter().map(|b| b.shape()).collect::<Vec<_>>(),
                dims
            )))
        }
    }

    /// Checks the density invariants: Hermitian, PSD blocks, unit total trace.
    pub fn validate_density(&self, tol: &ToleranceConfig) -> Result<()> {
        for (k, b) in self.blocks.iter().enumerate() {
            require_square(b, "density block")?;
            let deviation = hermiticity_deviation(b);
            if deviation > tol.hermiticity {
                return Err(Error::NotHermitian { deviation });
            }
            let min = hermitian_eigenvalues(b)
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            if min < -tol.positivity {
                return Err(Error::NotPositive {
                    block: k,
                    min_eigenvalue: min,
                });
            }
        }
        let tr = self.trace().re;
        if (tr - 1.0).abs() > tol.normalization {
            return Err(Error::BadTrace { trace: tr });
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(hermitian_eigenvalues)
            .fold(f64::INFINITY, f64::min)
    }

    /// Trace distance of the full block-diagonal matrices.
    pub fn trace_distance(&self, other: &BlockMatrix) -> Result<f64> {
        self.check_shape(&other.dims())?;
        Ok(0.5
            * self
                .blocks
                .iter()
                .zip(&other.blocks)
                .flat_map(|(a, b)| hermitian_eigenvalues(&(a - b)))
                .map(f64::abs)
                .sum::<f64>())
    }

    pub fn max_abs_diff(&self, other: &BlockMatrix) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    /// Stacks the blocks, each in column-major order.
    pub fn vectorize(&self) -> CVector {
        let len: usize = self.blocks.iter().map(|b| b.len()).sum();
        CVector::from_iterator(len, self.blocks.iter().flat_map(|b| b.iter().copied()))
    }

    pub fn from_vector(dims: &[usize], v: &CVector) -> Result<Self> {
        let len: usize = dims.iter().map(|n| n * n).sum();
        if v.len() != len {
            return Err(Error::Dimension(format!(
                "vector of length {} for block dims {:?}",
                v.len(),
                dims
            )));
        }
        let mut offset = 0;
        let blocks = dims
            .iter()
            .map(|&n| {
                let b = CMatrix::from_column_slice(n, n, &v.as_slice()[offset..offset + n * n]);
                offset += n * n;
                b
            })
            .collect();
        Ok(Self { blocks })
    }
}

/// A Lindblad generator on block-diagonal states.
pub trait Lindbladian: Sync {
    /// Hilbert-space dimension of each sector.
    fn dims(&self) -> &[usize];

    /// `dρ/dt` in the Schrödinger picture.
    fn liouville_rhs(&self, rho: &BlockMatrix) -> Result<BlockMatrix>;

    /// `dA/dt` in the Heisenberg picture.
    fn heisenberg_rhs(&self, a: &BlockMatrix) -> Result<BlockMatrix>;
}

/// One coupling operator `g_{to,from}` of shape `n_to × n_from`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub to: usize,
    pub from: usize,
    pub matrix: CMatrix,
}

impl Coupling {
    pub fn new(to: usize, from: usize, matrix: CMatrix) -> Self {
        Self { to, from, matrix }
    }
}

/// Quantum system with `m` classical sectors. Each sector carries its own
/// Hamiltonian; sectors are linked by at most one coupling operator per
/// ordered pair and never to themselves.
#[derive(Debug, Clone)]
pub struct HybridModel {
    dims: Vec<usize>,
    hamiltonians: Vec<CMatrix>,
    couplings: Vec<Coupling>,
    lambdas: Vec<CMatrix>,
    no_jump: Vec<CMatrix>,
}

impl HybridModel {
    /// Validates and builds a model. Zero diagonal couplings are dropped;
    /// nonzero ones are rejected.
    pub fn new(
        hamiltonians: Vec<CMatrix>,
        couplings: Vec<Coupling>,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        if let Some(err) = Self::violations(&hamiltonians, &couplings, tol)
            .into_iter()
            .next()
        {
            return Err(err);
        }
        let dims: Vec<usize> = hamiltonians.iter().map(|h| h.nrows()).collect();
        let mut couplings: Vec<Coupling> =
            couplings.into_iter().filter(|c| c.to != c.from).collect();
        couplings.sort_by_key(|c| (c.from, c.to));

        let lambdas: Vec<CMatrix> = dims
            .iter()
            .enumerate()
            .map(|(alpha, &n)| {
                couplings
                    .iter()
                    .filter(|c| c.from == alpha)
                    .fold(CMatrix::zeros(n, n), |acc, c| {
                        acc + c.matrix.adjoint() * &c.matrix
                    })
            })
            .collect();
        let no_jump = hamiltonians
            .iter()
            .zip(&lambdas)
            .map(|(h, l)| h * c64(0.0, -1.0) - l.scale(0.5))
            .collect();
        Ok(Self {
            dims,
            hamiltonians,
            couplings,
            lambdas,
            no_jump,
        })
    }

    /// Every invariant violation, in sector order.
    pub fn violations(
        hamiltonians: &[CMatrix],
        couplings: &[Coupling],
        tol: &ToleranceConfig,
    ) -> Vec<Error> {
        let mut out = Vec::new();
        let m = hamiltonians.len();
        if m == 0 {
            out.push(Error::InvalidConfig("model has no sectors".into()));
        }
        for (alpha, h) in hamiltonians.iter().enumerate() {
            if !h.is_square() {
                out.push(Error::Dimension(format!(
                    "Hamiltonian of sector {alpha} is {}x{}",
                    h.nrows(),
                    h.ncols()
                )));
            } else if h.nrows() == 0 {
                out.push(Error::Dimension(format!("sector {alpha} has dimension 0")));
            } else if hermiticity_deviation(h) > tol.hermiticity {
                out.push(Error::NonHermitian(alpha));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in couplings {
            if c.to >= m {
                out.push(Error::InvalidSector(c.to));
                continue;
            }
            if c.from >= m {
                out.push(Error::InvalidSector(c.from));
                continue;
            }
            if c.matrix.nrows() != hamiltonians[c.to].nrows()
                || c.matrix.ncols() != hamiltonians[c.from].nrows()
            {
                out.push(Error::ShapeMismatch {
                    to: c.to,
                    from: c.from,
                });
                continue;
            }
            if c.to == c.from {
                if c.matrix.iter().any(|z| z.norm() != 0.0) {
                    out.push(Error::DiagonalCouplingPresent(c.to));
                }
                continue;
            }
            if !seen.insert((c.to, c.from)) {
                out.push(Error::DuplicateCoupling {
                    to: c.to,
                    from: c.from,
                });
            }
        }
        out
    }

    /// Re-checks the invariants under a (possibly different) tolerance.
    pub fn validate(&self, tol: &ToleranceConfig) -> Result<()> {
        match Self::violations(&self.hamiltonians, &self.couplings, tol)
            .into_iter()
            .next()
        {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    pub fn sector_count(&self) -> usize {
        self.dims.len()
    }

    pub fn hamiltonian(&self, alpha: usize) -> Result<&CMatrix> {
        self.hamiltonians
            .get(alpha)
            .ok_or(Error::InvalidSector(alpha))
    }

    pub fn hamiltonians(&self) -> &[CMatrix] {
        &self.hamiltonians
    }

    /// All couplings, ordered by `(from, to)`.
    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn coupling(&self, to: usize, from: usize) -> Option<&CMatrix> {
        self.couplings
            .iter()
            .find(|c| c.to == to && c.from == from)
            .map(|c| &c.matrix)
    }

    /// Couplings leaving `from`, in ascending target order.
    pub fn outgoing(&self, from: usize) -> impl Iterator<Item = &Coupling> {
        self.couplings.iter().filter(move |c| c.from == from)
    }

    /// `Λ_α = Σ_β g_βα* g_βα`.
    pub fn lambda_op(&self, alpha: usize) -> Result<&CMatrix> {
        self.lambdas.get(alpha).ok_or(Error::InvalidSector(alpha))
    }

    /// `-iH_α - ½Λ_α`, the generator of the no-event flow in sector `α`.
    pub fn no_jump_generator(&self, alpha: usize) -> Result<&CMatrix> {
        self.no_jump.get(alpha).ok_or(Error::InvalidSector(alpha))
    }
}

impl Lindbladian for HybridModel {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn liouville_rhs(&self, rho: &BlockMatrix) -> Result<BlockMatrix> {
        rho.check_shape(&self.dims)?;
        let mut out: Vec<CMatrix> = rho
            .blocks
            .iter()
            .enumerate()
            .map(|(a, r)| {
                commutator(&self.hamiltonians[a], r) * c64(0.0, -1.0)
                    - anticommutator(&self.lambdas[a], r).scale(0.5)
            })
            .collect();
        for c in &self.couplings {
            out[c.to] += &c.matrix * &rho.blocks[c.from] * c.matrix.adjoint();
        }
        Ok(BlockMatrix::new(out))
    }

    fn heisenberg_rhs(&self, a: &BlockMatrix) -> Result<BlockMatrix> {
        a.check_shape(&self.dims)?;
        let mut out: Vec<CMatrix> = a
            .blocks
            .iter()
            .enumerate()
            .map(|(k, x)| {
                commutator(&self.hamiltonians[k], x) * c64(0.0, 1.0)
                    - anticommutator(&self.lambdas[k], x).scale(0.5)
            })
            .collect();
        for c in &self.couplings {
            out[c.from] += c.matrix.adjoint() * &a.blocks[c.to] * &c.matrix;
        }
        Ok(BlockMatrix::new(out))
    }
}

/// Single-sector Lindblad model with an arbitrary list of jump operators.
#[derive(Debug, Clone)]
pub struct PureLindbladModel {
    dims: [usize; 1],
    hamiltonian: CMatrix,
    lindblad_ops: Vec<CMatrix>,
    lambda: CMatrix,
    no_jump: CMatrix,
}

impl PureLindbladModel {
    pub fn new(
        hamiltonian: CMatrix,
        lindblad_ops: Vec<CMatrix>,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let n = require_square(&hamiltonian, "Hamiltonian")?;
        if n == 0 {
            return Err(Error::Dimension("dimension 0".into()));
        }
        if hermiticity_deviation(&hamiltonian) > tol.hermiticity {
            return Err(Error::NonHermitian(0));
        }
        for (k, v) in lindblad_ops.iter().enumerate() {
            if v.shape() != (n, n) {
                return Err(Error::Dimension(format!(
                    "Lindblad operator {k} is {:?}, expected {n}x{n}",
                    v.shape()
                )));
            }
        }
        let lambda = lindblad_ops
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, v| acc + v.adjoint() * v);
        let no_jump = &hamiltonian * c64(0.0, -1.0) - lambda.scale(0.5);
        Ok(Self {
            dims: [n],
            hamiltonian,
            lindblad_ops,
            lambda,
            no_jump,
        })
    }

    pub fn validate(&self, tol: &ToleranceConfig) -> Result<()> {
        if hermiticity_deviation(&self.hamiltonian) > tol.hermiticity {
            return Err(Error::NonHermitian(0));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dims[0]
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn lindblad_ops(&self) -> &[CMatrix] {
        &self.lindblad_ops
    }

    /// `Σ_k V_k* V_k`.
    pub fn lambda(&self) -> &CMatrix {
        &self.lambda
    }

    /// `-iH - ½ Σ_k V_k* V_k`.
    pub fn no_jump_generator(&self) -> &CMatrix {
        &self.no_jump
    }

    pub fn rhs_matrix(&self, rho: &CMatrix) -> CMatrix {
        let mut out = commutator(&self.hamiltonian, rho) * c64(0.0, -1.0)
            - anticommutator(&self.lambda, rho).scale(0.5);
        for v in &self.lindblad_ops {
            out += v * rho * v.adjoint();
        }
        out
    }
}

impl Lindbladian for PureLindbladModel {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn liouville_rhs(&self, rho: &BlockMatrix) -> Result<BlockMatrix> {
        rho.check_shape(&self.dims)?;
        Ok(BlockMatrix::new(vec![self.rhs_matrix(&rho.blocks[0])]))
    }

    fn heisenberg_rhs(&self, a: &BlockMatrix) -> Result<BlockMatrix> {
        a.check_shape(&self.dims)?;
        let x = &a.blocks[0];
        let mut out = commutator(&self.hamiltonian, x) * c64(0.0, 1.0)
            - anticommutator(&self.lambda, x).scale(0.5);
        for v in &self.lindblad_ops {
            out += v.adjoint() * x * v;
        }
        Ok(BlockMatrix::new(vec![out]))
    }
}

/// A point of the pure-state manifold: a sector and a unit vector in it.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridPureState {
    pub sector: usize,
    pub psi: CVector,
}

impl HybridPureState {
    pub fn new(sector: usize, psi: CVector, tol: &ToleranceConfig) -> Result<Self> {
        check_normalized(&psi, tol.normalization)?;
        Ok(Self { sector, psi })
    }

    /// Normalizes `psi` instead of checking it.
    pub fn normalized(sector: usize, psi: &CVector) -> Result<Self> {
        Ok(Self {
            sector,
            psi: crate::numerics::normalized(psi)?,
        })
    }

    pub fn check_against(&self, dims: &[usize]) -> Result<()> {
        match dims.get(self.sector) {
            None => Err(Error::InvalidSector(self.sector)),
            Some(&n) if n != self.psi.len() => Err(Error::Dimension(format!(
                "state of length {} in sector {} of dimension {n}",
                self.psi.len(),
                self.sector
            ))),
            Some(_) => Ok(()),
        }
    }
}

/// `P_x`: `|ψ⟩⟨ψ|` in block `α`, zero elsewhere.
pub fn embed_pure_state(x: &HybridPureState, dims: &[usize]) -> Result<BlockDensity> {
    x.check_against(dims)?;
    let mut rho = BlockMatrix::zeros(dims);
    rho.blocks[x.sector] = outer(&x.psi);
    Ok(rho)
}

/// Matrix of the Liouville map on the stacked, column-major vectorized
/// blocks; dimension `Σ_α n_α²`.
pub fn build_superoperator<L: Lindbladian + ?Sized>(model: &L) -> Result<CMatrix> {
    let dims = model.dims();
    let size: usize = dims.iter().map(|n| n * n).sum();
    let mut sup = CMatrix::zeros(size, size);
    let mut basis = CVector::zeros(size);
    for col in 0..size {
        basis[col] = c64(1.0, 0.0);
        let e = BlockMatrix::from_vector(dims, &basis)?;
        let image = model.liouville_rhs(&e)?.vectorize();
        sup.set_column(col, &image);
        basis[col] = c64(0.0, 0.0);
    }
    Ok(sup)
}

/// `exp(tL) ρ0`.
pub fn propagate_exact<L: Lindbladian + ?Sized>(
    model: &L,
    rho0: &BlockDensity,
    t: f64,
) -> Result<BlockDensity> {
    ExactPropagator::new(model)?.propagate(rho0, t)
}

/// Caches the superoperator for repeated propagation of one model.
#[derive(Debug, Clone)]
pub struct ExactPropagator {
    dims: Vec<usize>,
    superoperator: CMatrix,
}

impl ExactPropagator {
    pub fn new<L: Lindbladian + ?Sized>(model: &L) -> Result<Self> {
        Ok(Self {
            dims: model.dims().to_vec(),
            superoperator: build_superoperator(model)?,
        })
    }

    pub fn superoperator(&self) -> &CMatrix {
        &self.superoperator
    }

    pub fn propagate(&self, rho0: &BlockDensity, t: f64) -> Result<BlockDensity> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        rho0.check_shape(&self.dims)?;
        if t == 0.0 {
            return Ok(rho0.clone());
        }
        let evolution = matexp(&self.superoperator.scale(t))?;
        BlockMatrix::from_vector(&self.dims, &(evolution * rho0.vectorize()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{
        cvector, max_abs_diff, pauli, random, real_matrix, real_vector, RngStream,
    };

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn eye2() -> CMatrix {
        CMatrix::identity(2, 2)
    }

    fn sigma_x_model() -> PureLindbladModel {
        PureLindbladModel::new(CMatrix::zeros(2, 2), vec![pauli::x()], &tol()).unwrap()
    }

    fn decay_model() -> PureLindbladModel {
        PureLindbladModel::new(CMatrix::zeros(2, 2), vec![pauli::lowering()], &tol()).unwrap()
    }

    fn two_sector(g21: CMatrix) -> HybridModel {
        HybridModel::new(
            vec![CMatrix::zeros(2, 2), CMatrix::zeros(2, 2)],
            vec![Coupling::new(1, 0, g21)],
            &tol(),
        )
        .unwrap()
    }

    fn diag(a: f64, b: f64) -> CMatrix {
        real_matrix(2, 2, &[a, 0.0, 0.0, b])
    }

    #[test]
    fn validation_examples() {
        assert!(HybridModel::new(vec![pauli::z()], vec![], &tol()).is_ok());
        assert_eq!(
            HybridModel::new(vec![pauli::z()], vec![Coupling::new(0, 0, eye2())], &tol())
                .unwrap_err(),
            Error::DiagonalCouplingPresent(0)
        );
        assert_eq!(
            HybridModel::new(vec![pauli::lowering()], vec![], &tol()).unwrap_err(),
            Error::NonHermitian(0)
        );
        // zero diagonal coupling is tolerated and dropped
        let m = HybridModel::new(
            vec![pauli::z()],
            vec![Coupling::new(0, 0, CMatrix::zeros(2, 2))],
            &tol(),
        )
        .unwrap();
        assert!(m.couplings().is_empty());
    }

    #[test]
    fn validation_shape_and_duplicates() {
        let hs = vec![CMatrix::zeros(2, 2), CMatrix::zeros(3, 3)];
        let bad = Coupling::new(1, 0, CMatrix::zeros(2, 2));
        assert_eq!(
            HybridModel::new(hs.clone(), vec![bad], &tol()).unwrap_err(),
            Error::ShapeMismatch { to: 1, from: 0 }
        );
        let g = CMatrix::zeros(3, 2);
        let errs = HybridModel::violations(
            &hs,
            &[Coupling::new(1, 0, g.clone()), Coupling::new(1, 0, g)],
            &tol(),
        );
        assert_eq!(errs, vec![Error::DuplicateCoupling { to: 1, from: 0 }]);
        assert_eq!(
            HybridModel::new(hs, vec![Coupling::new(5, 0, CMatrix::zeros(1, 2))], &tol())
                .unwrap_err(),
            Error::InvalidSector(5)
        );
    }

    #[test]
    fn lambda_examples() {
        let none = HybridModel::new(vec![eye2()], vec![], &tol()).unwrap();
        assert_eq!(none.lambda_op(0).unwrap(), &CMatrix::zeros(2, 2));

        let k = 2.0f64;
        let m = two_sector(eye2().scale(k.sqrt()));
        assert!(max_abs_diff(m.lambda_op(0).unwrap(), &eye2().scale(2.0)) < 1e-15);
        assert_eq!(m.lambda_op(1).unwrap(), &CMatrix::zeros(2, 2));

        let d = two_sector(pauli::lowering());
        assert_eq!(d.lambda_op(0).unwrap(), &diag(0.0, 1.0));
        assert_eq!(d.lambda_op(2).unwrap_err(), Error::InvalidSector(2));
    }

    #[test]
    fn liouville_examples() {
        let free = HybridModel::new(vec![CMatrix::zeros(2, 2)], vec![], &tol()).unwrap();
        let rho = BlockMatrix::new(vec![diag(0.3, 0.7)]);
        assert_eq!(free.liouville_rhs(&rho).unwrap(), BlockMatrix::zeros(&[2]));

        let sx = sigma_x_model();
        let d = sx
            .liouville_rhs(&BlockMatrix::new(vec![diag(1.0, 0.0)]))
            .unwrap();
        assert_eq!(d.blocks[0], diag(-1.0, 1.0));

        let h = two_sector(eye2());
        let d = h
            .liouville_rhs(&BlockMatrix::new(vec![
                diag(1.0, 0.0),
                CMatrix::zeros(2, 2),
            ]))
            .unwrap();
        assert_eq!(d.blocks[0], diag(-1.0, 0.0));
        assert_eq!(d.blocks[1], diag(1.0, 0.0));

        assert!(matches!(
            h.liouville_rhs(&BlockMatrix::new(vec![diag(1.0, 0.0)])),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn heisenberg_examples() {
        let h = two_sector(eye2());
        let id = BlockMatrix::identity(&[2, 2]);
        assert!(
            h.heisenberg_rhs(&id)
                .unwrap()
                .max_abs_diff(&BlockMatrix::zeros(&[2, 2]))
                < 1e-15
        );

        let rot = PureLindbladModel::new(pauli::z(), vec![], &tol()).unwrap();
        let d = rot
            .heisenberg_rhs(&BlockMatrix::new(vec![pauli::x()]))
            .unwrap();
        assert!(max_abs_diff(&d.blocks[0], &pauli::y().scale(-2.0)) < 1e-15);

        let d = h
            .heisenberg_rhs(&BlockMatrix::new(vec![CMatrix::zeros(2, 2), eye2()]))
            .unwrap();
        assert_eq!(d.blocks[0], eye2());
        assert_eq!(d.blocks[1], CMatrix::zeros(2, 2));
    }

    #[test]
    fn superoperator_examples() {
        let free = PureLindbladModel::new(CMatrix::zeros(2, 2), vec![], &tol()).unwrap();
        assert_eq!(build_superoperator(&free).unwrap(), CMatrix::zeros(4, 4));

        let sx = sigma_x_model();
        let s = build_superoperator(&sx).unwrap();
        assert_eq!(s.shape(), (4, 4));
        let out = &s * BlockMatrix::new(vec![diag(1.0, 0.0)]).vectorize();
        let expected = BlockMatrix::new(vec![diag(-1.0, 1.0)]).vectorize();
        assert!((out - expected).norm() < 1e-15);

        let h = two_sector(pauli::lowering());
        let s = build_superoperator(&h).unwrap();
        assert_eq!(s.shape(), (8, 8));
        let trace_row = BlockMatrix::identity(&[2, 2]).vectorize().transpose();
        assert!((trace_row * &s).norm() < 1e-15);
    }

    #[test]
    fn superoperator_matches_rhs_on_random_states() {
        let mut rng = RngStream::new(11, 0);
        for _ in 0..20 {
            let model = crate::verify::random_hybrid_model(&mut rng, 3, 3);
            let rho = crate::verify::random_block_density(&mut rng, model.dims());
            let s = build_superoperator(&model).unwrap();
            let direct = model.liouville_rhs(&rho).unwrap().vectorize();
            assert!((s * rho.vectorize() - direct).camax() < 1e-12);
        }
    }

    #[test]
    fn propagate_examples() {
        let sx = sigma_x_model();
        let rho0 = BlockMatrix::new(vec![diag(1.0, 0.0)]);
        assert_eq!(propagate_exact(&sx, &rho0, 0.0).unwrap(), rho0);

        let r = propagate_exact(&sx, &rho0, 1.0).unwrap();
        let e2 = (-2f64).exp();
        assert!((r.blocks[0][(0, 0)].re - (1.0 + e2) / 2.0).abs() < 1e-12);
        assert!((r.blocks[0][(1, 1)].re - (1.0 - e2) / 2.0).abs() < 1e-12);

        let dm = decay_model();
        let r = propagate_exact(&dm, &BlockMatrix::new(vec![diag(0.0, 1.0)]), 1.0).unwrap();
        let e1 = (-1f64).exp();
        assert!((r.blocks[0][(0, 0)].re - (1.0 - e1)).abs() < 1e-12);
        assert!((r.blocks[0][(1, 1)].re - e1).abs() < 1e-12);

        assert_eq!(
            propagate_exact(&sx, &rho0, -1.0).unwrap_err(),
            Error::NegativeTime(-1.0)
        );
    }

    #[test]
    fn embed_examples() {
        let x = HybridPureState::new(0, real_vector(&[1.0, 0.0]), &tol()).unwrap();
        let rho = embed_pure_state(&x, &[2, 2]).unwrap();
        assert_eq!(rho.blocks[0], diag(1.0, 0.0));
        assert_eq!(rho.blocks[1], CMatrix::zeros(2, 2));

        let s = 1.0 / 2f64.sqrt();
        let y = HybridPureState::new(1, real_vector(&[s, s]), &tol()).unwrap();
        let rho = embed_pure_state(&y, &[2, 2]).unwrap();
        assert!(max_abs_diff(&rho.blocks[1], &real_matrix(2, 2, &[0.5; 4])) < 1e-15);
        assert!((rho.trace().re - 1.0).abs() < 1e-15);

        assert!(HybridPureState::new(0, real_vector(&[1.0, 1.0]), &tol()).is_err());
        let z = HybridPureState::new(2, cvector(&[(1.0, 0.0)]), &tol()).unwrap();
        assert_eq!(
            embed_pure_state(&z, &[2, 2]).unwrap_err(),
            Error::InvalidSector(2)
        );
    }

    #[test]
    fn random_generator_properties() {
        let mut rng = RngStream::new(5, 0);
        for _ in 0..200 {
            let model = crate::verify::random_hybrid_model(&mut rng, 3, 3);
            let dims = model.dims().to_vec();
            let rho = crate::verify::random_block_density(&mut rng, &dims);
            let a = BlockMatrix::new(
                dims.iter()
                    .map(|&n| random::hermitian(&mut rng, n, 1.0))
                    .collect(),
            );
            let lhs = model.heisenberg_rhs(&a).unwrap().trace_product(&rho);
            let rhs = a.trace_product(&model.liouville_rhs(&rho).unwrap());
            assert!((lhs - rhs).norm() < 1e-10);
            assert!(model.liouville_rhs(&rho).unwrap().trace().norm() < 1e-12);
        }
    }

    #[test]
    fn propagation_positivity_and_semigroup() {
        let mut rng = RngStream::new(6, 0);
        for _ in 0..20 {
            let model = crate::verify::random_hybrid_model(&mut rng, 3, 3);
            let rho = crate::verify::random_block_density(&mut rng, model.dims());
            let prop = ExactPropagator::new(&model).unwrap();
            for t in [0.1, 1.0, 10.0] {
                let r = prop.propagate(&rho, t).unwrap();
                assert!(r.min_eigenvalue() >= -1e-8);
                assert!((r.trace().re - 1.0).abs() < 1e-10);
            }
            let direct = prop.propagate(&rho, 0.7).unwrap();
            let split = prop
                .propagate(&prop.propagate(&rho, 0.3).unwrap(), 0.4)
                .unwrap();
            assert!(direct.max_abs_diff(&split) < 1e-9);
        }
    }
}

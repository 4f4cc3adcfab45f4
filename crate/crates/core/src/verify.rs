// Copyright 2026 EEQT Contributors
// SPDX-License-Identifier: Apache-2.0

//! Checks tying the event process to the master equation.
//!
//! For a pure state `x = (α0, ψ)` with projector `P_x`, the process generator
//! acting on a linear observable `f_A(y) = Tr(A P_y)` is
//!
//! ```text
//! (A f)(x) = Σ_{α≠α0} c_α(x) f(x_α) - c(x) f(x) + Tr(A_α0 v(x))
//! c_α(x)   = ‖g_{α α0} ψ‖²,   x_α = g_{α α0} ψ / ‖g_{α α0} ψ‖
//! v(x)     = -i[H_α0, P_x] - ½{P_x, Λ_α0} + P_x Tr(P_x Λ_α0)
//! ```
//!
//! and it must agree with `Tr(A · L(P_x))` exactly. Writing the jump
//! operators as `W_{α0 α} = g_{α α0}*` puts these in the form
//! `c_α = Tr(P_x W W*)`, `P_{x_α} = W* P_x W / c_α`.

use serde::Serialize;

use crate::ensemble::EnsembleEstimate;
use crate::error::{Error, Result};
use crate::model::{
    embed_pure_state, BlockDensity, BlockMatrix, Coupling, ExactPropagator, HybridModel,
    HybridPureState, Lindbladian, PureLindbladModel,
};
use crate::numerics::{
    anticommutator, c64, commutator, max_abs_diff, outer, pauli, random, real_vector, trace,
    trace_product, CMatrix, CVector, RngStream, ToleranceConfig,
};
use crate::unravel::{qsd_diffusion, qsd_drift};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorTerms {
    /// `(α, c_α(x))` for every outgoing coupling, ascending in α.
    pub rates: Vec<(usize, f64)>,
    pub total_rate: f64,
    /// `(α, ψ_α)` for each channel with `c_α > 0`.
    pub targets: Vec<(usize, CVector)>,
    /// Tangent vector `v(x)` as an `n_α0 × n_α0` matrix.
    pub drift: CMatrix,
}

pub fn generator_terms(model: &HybridModel, x: &HybridPureState) -> Result<GeneratorTerms> {
    x.check_against(model.dims())?;
    let alpha0 = x.sector;
    let p = outer(&x.psi);
    let mut rates = Vec::new();
    let mut targets = Vec::new();
    for c in model.outgoing(alpha0) {
        // W = g*, so W W* = g* g and W* P W = g P g*
        let image = &c.matrix * &x.psi;
        let rate = image.norm_squared();
        rates.push((c.to, rate));
        if rate > 0.0 {
            targets.push((c.to, image.unscale(rate.sqrt())));
        }
    }
    let total_rate = rates.iter().map(|r| r.1).sum();
    let lambda = model.lambda_op(alpha0)?;
    let h = model.hamiltonian(alpha0)?;
    let drift = commutator(h, &p) * c64(0.0, -1.0) - anticommutator(&p, lambda).scale(0.5)
        + &p * trace_product(&p, lambda);
    Ok(GeneratorTerms {
        rates,
        total_rate,
        targets,
        drift,
    })
}

/// `(A f_A)(x)` for the linear observable `f_A(y) = Tr(A P_y)`.
pub fn generator_apply(model: &HybridModel, x: &HybridPureState, a: &BlockMatrix) -> Result<f64> {
    a.check_shape(model.dims())?;
    let terms = generator_terms(model, x)?;
    let expect = |sector: usize, psi: &CVector| psi.dotc(&(&a.blocks[sector] * psi)).re;
    let mut value = 0.0;
    for (alpha, psi) in &terms.targets {
        let rate = terms
            .rates
            .iter()
            .find(|r| r.0 == *alpha)
            .map_or(0.0, |r| r.1);
        value += rate * expect(*alpha, psi);
    }
    value -= terms.total_rate * expect(x.sector, &x.psi);
    value += trace_product(&a.blocks[x.sector], &terms.drift).re;
    Ok(value)
}

/// `|Tr(A · L(P_x)) - (A f_A)(x)|`.
pub fn check_theorem4(model: &HybridModel, x: &HybridPureState, a: &BlockMatrix) -> Result<f64> {
    let lp = model.liouville_rhs(&embed_pure_state(x, model.dims())?)?;
    let lhs = a.trace_product(&lp).re;
    Ok((lhs - generator_apply(model, x, a)?).abs())
}

/// `|Tr(P_φ · L(P_ψ)_α)|` for orthogonal unit `ψ, φ` in sector `α`.
pub fn check_lemma6<L: Lindbladian + ?Sized>(
    model: &L,
    alpha: usize,
    psi: &CVector,
    phi: &CVector,
) -> Result<f64> {
    let overlap = psi.dotc(phi).norm();
    if overlap > 1e-10 {
        return Err(Error::NonOrthogonal { overlap });
    }
    let x = HybridPureState::new(alpha, psi.clone(), &ToleranceConfig::default())?;
    HybridPureState::new(alpha, phi.clone(), &ToleranceConfig::default())?
        .check_against(model.dims())?;
    let lp = model.liouville_rhs(&embed_pure_state(&x, model.dims())?)?;
    Ok(trace_product(&outer(phi), &lp.blocks[alpha]).norm())
}

/// `|(Tr(A e^{dt L} P_x) - Tr(A P_x)) / dt - (A f_A)(x)|`.
pub fn check_finite_difference_generator(
    model: &HybridModel,
    x: &HybridPureState,
    a: &BlockMatrix,
    dt: f64,
) -> Result<f64> {
    if !(1e-7..=1e-3).contains(&dt) {
        return Err(Error::InvalidConfig(format!(
            "dt {dt} outside [1e-7, 1e-3]"
        )));
    }
    let p = embed_pure_state(x, model.dims())?;
    let evolved = ExactPropagator::new(model)?.propagate(&p, dt)?;
    let quotient = (a.trace_product(&evolved).re - a.trace_product(&p).re) / dt;
    Ok((quotient - generator_apply(model, x, a)?).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub grid: Vec<f64>,
    pub trace_distances: Vec<f64>,
    pub stat_tolerance: Vec<f64>,
    pub pass: bool,
}

/// Floor added to every tolerance so that an exact match in floating point
/// never fails.
pub const COMPARISON_FLOOR: f64 = 1e-12;

/// Trace distance between the ensemble mean and the exact propagation at
/// each grid time, against `3 · aggregate stderr + bias`.
///
/// `bias` holds a per-grid-time method bias allowance (empty for none).
pub fn compare_ensemble_to_oracle<L: Lindbladian + ?Sized>(
    model: &L,
    initial: &BlockDensity,
    estimate: &EnsembleEstimate,
    bias: &[f64],
) -> Result<ComparisonReport> {
    if !bias.is_empty() && bias.len() != estimate.grid.len() {
        return Err(Error::Dimension(
            "bias allowance length differs from grid".into(),
        ));
    }
    let oracle = ExactPropagator::new(model)?;
    let mut trace_distances = Vec::with_capacity(estimate.grid.len());
    let mut stat_tolerance = Vec::with_capacity(estimate.grid.len());
    for (k, &t) in estimate.grid.iter().enumerate() {
        let exact = oracle.propagate(initial, t)?;
        trace_distances.push(estimate.mean_blocks[k].trace_distance(&exact)?);
        let b = bias.get(k).copied().unwrap_or(0.0);
        stat_tolerance.push(3.0 * estimate.aggregate_stderr(k) + b + COMPARISON_FLOOR);
    }
    let pass = trace_distances
        .iter()
        .zip(&stat_tolerance)
        .all(|(d, tol)| d <= tol);
    Ok(ComparisonReport {
        grid: estimate.grid.clone(),
        trace_distances,
        stat_tolerance,
        pass,
    })
}

/// Discretization bias allowance for a first-order scheme, from estimates at
/// `dt` and `dt/2` on shared noise: `bias(dt) ≈ 2 · d(est_dt, est_dt/2)`.
pub fn halving_bias_allowance(
    coarse: &EnsembleEstimate,
    fine: &EnsembleEstimate,
) -> Result<Vec<f64>> {
    coarse
        .mean_blocks
        .iter()
        .zip(&fine.mean_blocks)
        .map(|(c, f)| Ok(2.0 * c.trace_distance(f)?))
        .collect()
}

/// Random model with `1..=max_sectors` sectors of dimension
/// `min_dim..=max_dim`; each ordered pair is coupled with probability 0.7.
pub fn random_hybrid_model_in(
    rng: &mut RngStream,
    max_sectors: usize,
    min_dim: usize,
    max_dim: usize,
) -> HybridModel {
    let pick = |rng: &mut RngStream, lo: usize, hi: usize| {
        lo + (rng.uniform01() * (hi - lo + 1) as f64) as usize
    };
    let m = pick(rng, 1, max_sectors);
    let dims: Vec<usize> = (0..m).map(|_| pick(rng, min_dim, max_dim)).collect();
    let hamiltonians = dims
        .iter()
        .map(|&n| random::hermitian(rng, n, 1.0))
        .collect();
    let mut couplings = Vec::new();
    for to in 0..m {
        for from in 0..m {
            if to != from && rng.uniform01() < 0.7 {
                couplings.push(Coupling::new(
                    to,
                    from,
                    random::complex_matrix(rng, dims[to], dims[from], 0.5),
                ));
            }
        }
    }
    HybridModel::new(hamiltonians, couplings, &ToleranceConfig::default())
        .expect("random models satisfy the invariants")
}

pub fn random_hybrid_model(rng: &mut RngStream, max_sectors: usize, max_dim: usize) -> HybridModel {
    random_hybrid_model_in(rng, max_sectors, 1, max_dim)
}

pub fn random_block_density(rng: &mut RngStream, dims: &[usize]) -> BlockDensity {
    let weights: Vec<f64> = dims.iter().map(|_| -rng.uniform_open01().ln()).collect();
    let total: f64 = weights.iter().sum();
    BlockMatrix::new(
        dims.iter()
            .zip(&weights)
            .map(|(&n, w)| random::density(rng, n, w / total))
            .collect(),
    )
}

pub fn random_block_observable(rng: &mut RngStream, dims: &[usize]) -> BlockMatrix {
    BlockMatrix::new(
        dims.iter()
            .map(|&n| random::hermitian(rng, n, 1.0))
            .collect(),
    )
}

pub fn random_pure_state(rng: &mut RngStream, dims: &[usize]) -> HybridPureState {
    let sector = ((rng.uniform01() * dims.len() as f64) as usize).min(dims.len() - 1);
    HybridPureState {
        sector,
        psi: random::unit_vector(rng, dims[sector]),
    }
}

/// One line of the `verify` report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    pub max_defect: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(name: &str, samples: usize, max_defect: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            samples,
            max_defect,
            threshold,
            pass: max_defect < threshold,
        }
    }
}

/// Generator identity over random models (`m ≤ 3`, `n_α ≤ 3`), ten random
/// states and observables per model.
pub fn sweep_theorem4(seed: u64, models: usize) -> Result<CheckResult> {
    let mut rng = RngStream::new(seed, 1);
    let mut worst = 0.0f64;
    let mut samples = 0;
    for _ in 0..models {
        let model = random_hybrid_model(&mut rng, 3, 3);
        for _ in 0..10 {
            let x = random_pure_state(&mut rng, model.dims());
            let a = random_block_observable(&mut rng, model.dims());
            worst = worst.max(check_theorem4(&model, &x, &a)?);
            samples += 1;
        }
    }
    Ok(CheckResult::new("generator_identity", samples, worst, 1e-8))
}

/// Orthogonality identity over random models with a random orthogonal pair.
pub fn sweep_lemma6(seed: u64, models: usize) -> Result<CheckResult> {
    let mut rng = RngStream::new(seed, 2);
    let mut worst = 0.0f64;
    for _ in 0..models {
        let model = random_hybrid_model_in(&mut rng, 3, 2, 3);
        let x = random_pure_state(&mut rng, model.dims());
        let phi = random::orthogonal_unit(&mut rng, &x.psi);
        worst = worst.max(check_lemma6(&model, x.sector, &x.psi, &phi)?);
    }
    Ok(CheckResult::new(
        "orthogonal_pair_identity",
        models,
        worst,
        1e-12,
    ))
}

/// A σx jump operator acting inside a single sector breaks the
/// orthogonality identity: the defect is `|⟨φ|σx|ψ⟩|² = 1`.
pub fn lemma6_violation_defect() -> Result<f64> {
    let model = PureLindbladModel::new(
        CMatrix::zeros(2, 2),
        vec![pauli::x()],
        &ToleranceConfig::default(),
    )?;
    check_lemma6(
        &model,
        0,
        &real_vector(&[1.0, 0.0]),
        &real_vector(&[0.0, 1.0]),
    )
}

pub fn sweep_qsd_norm_identities(seed: u64, samples: usize) -> Result<[CheckResult; 2]> {
    let mut rng = RngStream::new(seed, 3);
    let (mut i1, mut i2) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let n = 2 + (rng.uniform01() * 3.0) as usize;
        let a = random::complex_matrix(&mut rng, n, n, 1.0);
        let psi = random::unit_vector(&mut rng, n);
        let f = qsd_diffusion(&a, &psi)?;
        let g = qsd_drift(&a, &psi)?;
        i1 = i1.max(psi.dotc(&f).re.abs());
        i2 = i2.max((2.0 * psi.dotc(&g).re + f.norm_squared()).abs());
    }
    Ok([
        CheckResult::new("qsd_norm_identity_i1", samples, i1, 1e-12),
        CheckResult::new("qsd_norm_identity_i2", samples, i2, 1e-12),
    ])
}

/// `|Tr(L*(A) ρ) - Tr(A L(ρ))|` and `‖L*(I)‖` over random hybrid models.
pub fn sweep_duality(seed: u64, models: usize) -> Result<[CheckResult; 2]> {
    let mut rng = RngStream::new(seed, 4);
    let (mut dual, mut unital) = (0.0f64, 0.0f64);
    for _ in 0..models {
        let model = random_hybrid_model(&mut rng, 3, 3);
        let dims = model.dims().to_vec();
        let rho = random_block_density(&mut rng, &dims);
        let a = random_block_observable(&mut rng, &dims);
        let lhs = model.heisenberg_rhs(&a)?.trace_product(&rho);
        let rhs = a.trace_product(&model.liouville_rhs(&rho)?);
        dual = dual.max((lhs - rhs).norm());
        let li = model.heisenberg_rhs(&BlockMatrix::identity(&dims))?;
        unital = unital.max(li.max_abs_diff(&BlockMatrix::zeros(&dims)));
    }
    Ok([
        CheckResult::new("duality", models, dual, 1e-10),
        CheckResult::new("unitality", models, unital, 1e-12),
    ])
}

/// Invariants of the generator terms: rates add up, the drift is tangent
/// (`P v + v P = v`) and traceless, constants are annihilated.
pub fn sweep_generator_terms(seed: u64, samples: usize) -> Result<CheckResult> {
    let mut rng = RngStream::new(seed, 5);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let model = random_hybrid_model(&mut rng, 3, 3);
        let x = random_pure_state(&mut rng, model.dims());
        let terms = generator_terms(&model, &x)?;
        let p = outer(&x.psi);
        let tangency = max_abs_diff(&(&p * &terms.drift + &terms.drift * &p), &terms.drift);
        let sum = (terms.total_rate - terms.rates.iter().map(|r| r.1).sum::<f64>()).abs();
        let constant = generator_apply(&model, &x, &BlockMatrix::identity(model.dims()))?.abs();
        worst = worst
            .max(tangency)
            .max(trace(&terms.drift).norm())
            .max(sum)
            .max(constant);
    }
    Ok(CheckResult::new(
        "generator_terms_invariants",
        samples,
        worst,
        1e-10,
    ))
}

/// Forward-difference generator defect at `dt = 1e-6` on random models.
pub fn sweep_finite_difference(seed: u64, models: usize) -> Result<CheckResult> {
    let mut rng = RngStream::new(seed, 6);
    let mut worst = 0.0f64;
    for _ in 0..models {
        let model = random_hybrid_model(&mut rng, 3, 3);
        let x = random_pure_state(&mut rng, model.dims());
        let a = random_block_observable(&mut rng, model.dims());
        worst = worst.max(check_finite_difference_generator(&model, &x, &a, 1e-6)?);
    }
    Ok(CheckResult::new(
        "finite_difference_generator",
        models,
        worst,
        1e-4,
    ))
}

/// Every randomized identity check, as reported by the `verify` command.
pub fn verification_suite(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = vec![sweep_theorem4(seed, 100)?, sweep_lemma6(seed, 100)?];
    let violation = lemma6_violation_defect()?;
    out.push(CheckResult::new(
        "in_sector_jump_violation",
        1,
        (violation - 1.0).abs(),
        1e-12,
    ));
    out.extend(sweep_qsd_norm_identities(seed, 500)?);
    out.extend(sweep_duality(seed, 200)?);
    out.push(sweep_generator_terms(seed, 500)?);
    out.push(sweep_finite_difference(seed, 50)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::max_abs_diff;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn detector(kappa: f64) -> HybridModel {
        HybridModel::new(
            vec![CMatrix::zeros(2, 2), CMatrix::zeros(2, 2)],
            vec![Coupling::new(
                1,
                0,
                CMatrix::identity(2, 2).scale(kappa.sqrt()),
            )],
            &tol(),
        )
        .unwrap()
    }

    fn plus() -> CVector {
        let s = 1.0 / 2f64.sqrt();
        real_vector(&[s, s])
    }

    #[test]
    fn terms_without_couplings() {
        let m = HybridModel::new(vec![CMatrix::zeros(2, 2)], vec![], &tol()).unwrap();
        let t = generator_terms(&m, &HybridPureState::new(0, plus(), &tol()).unwrap()).unwrap();
        assert!(t.rates.is_empty());
        assert_eq!(t.total_rate, 0.0);
        assert_eq!(t.drift, CMatrix::zeros(2, 2));
    }

    #[test]
    fn terms_for_detector() {
        let psi = random::unit_vector(&mut RngStream::new(1, 0), 2);
        let t = generator_terms(
            &detector(2.0),
            &HybridPureState::new(0, psi.clone(), &tol()).unwrap(),
        )
        .unwrap();
        assert_eq!(t.rates.len(), 1);
        assert!((t.rates[0].1 - 2.0).abs() < 1e-14);
        assert_eq!(t.targets[0].0, 1);
        assert!((&t.targets[0].1 - &psi).camax() < 1e-15);
        assert!(t.drift.camax() < 1e-15);
    }

    #[test]
    fn terms_for_decay() {
        let m = HybridModel::new(
            vec![CMatrix::zeros(2, 2), CMatrix::zeros(2, 2)],
            vec![Coupling::new(1, 0, pauli::lowering())],
            &tol(),
        )
        .unwrap();
        let t = generator_terms(&m, &HybridPureState::new(0, plus(), &tol()).unwrap()).unwrap();
        assert!((t.total_rate - 0.5).abs() < 1e-15);
        assert!((&t.targets[0].1 - real_vector(&[1.0, 0.0])).camax() < 1e-15);
        let expected = crate::numerics::real_matrix(2, 2, &[0.25, 0.0, 0.0, -0.25]);
        assert!(max_abs_diff(&t.drift, &expected) < 1e-15);
    }

    #[test]
    fn apply_examples() {
        let d = detector(1.0);
        let x = HybridPureState::new(0, plus(), &tol()).unwrap();
        assert!(
            generator_apply(&d, &x, &BlockMatrix::identity(&[2, 2]))
                .unwrap()
                .abs()
                < 1e-15
        );

        let rot = HybridModel::new(vec![pauli::z()], vec![], &tol()).unwrap();
        let sx = BlockMatrix::new(vec![pauli::x()]);
        assert!(generator_apply(&rot, &x, &sx).unwrap().abs() < 1e-15);
        // ψ = (1, i)/√2 has Bloch vector +y; d⟨σx⟩/dt = -2⟨σy⟩ = -2
        let s = 1.0 / 2f64.sqrt();
        let y_state = crate::numerics::cvector(&[(s, 0.0), (0.0, s)]);
        let xy = HybridPureState::new(0, y_state, &tol()).unwrap();
        assert!((generator_apply(&rot, &xy, &sx).unwrap() + 2.0).abs() < 1e-14);

        let indicator = BlockMatrix::new(vec![CMatrix::zeros(2, 2), CMatrix::identity(2, 2)]);
        let k = 1.7;
        assert!((generator_apply(&detector(k), &x, &indicator).unwrap() - k).abs() < 1e-14);
    }

    #[test]
    fn generator_identity_examples() {
        let free = HybridModel::new(vec![CMatrix::zeros(2, 2)], vec![], &tol()).unwrap();
        let x = HybridPureState::new(0, plus(), &tol()).unwrap();
        let a = BlockMatrix::new(vec![pauli::y()]);
        assert_eq!(check_theorem4(&free, &x, &a).unwrap(), 0.0);
        let indicator = BlockMatrix::new(vec![CMatrix::zeros(2, 2), CMatrix::identity(2, 2)]);
        assert!(check_theorem4(&detector(1.0), &x, &indicator).unwrap() < 1e-12);
        let r = sweep_theorem4(77, 100).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn orthogonal_pair_examples() {
        let up = real_vector(&[1.0, 0.0]);
        let down = real_vector(&[0.0, 1.0]);
        let mut rng = RngStream::new(3, 3);
        for _ in 0..20 {
            let m = random_hybrid_model_in(&mut rng, 3, 2, 2);
            assert!(check_lemma6(&m, 0, &up, &down).unwrap() < 1e-12);
        }
        assert!(sweep_lemma6(5, 100).unwrap().pass);
        assert!((lemma6_violation_defect().unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            check_lemma6(&detector(1.0), 0, &up, &plus()),
            Err(Error::NonOrthogonal { .. })
        ));
    }

    #[test]
    fn finite_difference_examples() {
        let free = HybridModel::new(vec![CMatrix::zeros(2, 2)], vec![], &tol()).unwrap();
        let x = HybridPureState::new(0, plus(), &tol()).unwrap();
        let a = BlockMatrix::new(vec![pauli::x()]);
        assert_eq!(
            check_finite_difference_generator(&free, &x, &a, 1e-5).unwrap(),
            0.0
        );

        let indicator = BlockMatrix::new(vec![CMatrix::zeros(2, 2), CMatrix::identity(2, 2)]);
        let d1 = check_finite_difference_generator(&detector(1.0), &x, &indicator, 1e-5).unwrap();
        let d2 = check_finite_difference_generator(&detector(1.0), &x, &indicator, 5e-6).unwrap();
        let ratio = d1 / d2;
        assert!((1.7..=2.3).contains(&ratio), "ratio {ratio}");

        assert!(sweep_finite_difference(9, 20).unwrap().pass);
        assert!(check_finite_difference_generator(&free, &x, &a, 1e-2).is_err());
    }

    #[test]
    fn suite_passes() {
        for r in verification_suite(2026).unwrap() {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn exact_estimate_compares_clean() {
        let m = detector(1.0);
        let x = HybridPureState::new(0, plus(), &tol()).unwrap();
        let rho0 = embed_pure_state(&x, m.dims()).unwrap();
        let grid = vec![0.0, 0.5, 1.0];
        let prop = ExactPropagator::new(&m).unwrap();
        let states = grid
            .iter()
            .map(|&t| prop.propagate(&rho0, t).unwrap())
            .collect();
        let est = EnsembleEstimate::exact(grid, states);
        let rep = compare_ensemble_to_oracle(&m, &rho0, &est, &[]).unwrap();
        assert!(rep.pass);
        assert!(rep.trace_distances.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn wrong_rate_fails_comparison() {
        let x = HybridPureState::new(0, plus(), &tol()).unwrap();
        let wrong = detector(2.0);
        let rho0 = embed_pure_state(&x, wrong.dims()).unwrap();
        let prop = ExactPropagator::new(&wrong).unwrap();
        let est = EnsembleEstimate::exact(vec![1.0], vec![prop.propagate(&rho0, 1.0).unwrap()]);
        let rep = compare_ensemble_to_oracle(&detector(1.0), &rho0, &est, &[]).unwrap();
        assert!(!rep.pass);
        let expected = (-1f64).exp() - (-2f64).exp();
        assert!((rep.trace_distances[0] - expected).abs() < 1e-10);
    }
}

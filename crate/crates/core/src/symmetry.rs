//! Permutation symmetry of multipartite entanglement, and determinant bounds
//! for separable operations `ρ -> Σ_k M_k ρ M_k†` with product branches
//! `M_k = A_1^(k) ⊗ ... ⊗ A_n^(k)`.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::evolution::{BoundCheck, BOUND_SLACK, ENTANGLEMENT_THRESHOLD};
use crate::measures::{convex_roof, MeasureKind};
use crate::optim::{multistart, RoofConfig, UnitaryObjective};
use crate::states::{local_entropies, DensityOperator};
use crate::tensor::{
    det, hermitian_eig, kron_all, partial_trace_matrix, ComplexMatrix, Dims, Permutation,
};

pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Local entropies are compared at this absolute tolerance.
pub const ENTROPY_TOL: f64 = 1e-8;
/// Largest Frobenius residual accepted for a product-unitary witness.
pub const WITNESS_TOL: f64 = 1e-6;
/// Branches with smaller probability are skipped by [`check_l1_bound`].
pub const BRANCH_PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SeparableOperation {
    dims: Dims,
    branches: Vec<Vec<ComplexMatrix>>,
    trace_preserving: bool,
}

impl SeparableOperation {
    /// Validates shapes and `Σ_k M_k† M_k <= I`.
    pub fn new(dims: Dims, branches: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::MalformedOperation("no branches".into()));
        }
        for (k, branch) in branches.iter().enumerate() {
            if branch.len() != dims.len() {
                return Err(Error::MalformedOperation(format!(
                    "branch {k} has {} factors for {} subsystems",
                    branch.len(),
                    dims.len()
                )));
            }
            for (i, a) in branch.iter().enumerate() {
                let d = dims.as_slice()[i];
                if a.rows() != d || a.cols() != d {
                    return Err(Error::MalformedOperation(format!(
                        "branch {k} factor {i} is {}x{}, expected {d}x{d}",
                        a.rows(),
                        a.cols()
                    )));
                }
                if a.data()
                    .iter()
                    .any(|z| !z.re.is_finite() || !z.im.is_finite())
                {
                    return Err(Error::NonFinite);
                }
            }
        }
        let n = dims.total();
        let mut sum = ComplexMatrix::zeros(n, n);
        for branch in &branches {
            let m = kron_all(branch);
            sum = &sum + &(&m.adjoint() * &m);
        }
        let (vals, _) = hermitian_eig(&sum)?;
        let excess = vals[0] - 1.0;
        if excess > COMPLETENESS_TOL {
            return Err(Error::NotTraceNonIncreasing(excess));
        }
        let trace_preserving = vals.iter().all(|v| (v - 1.0).abs() <= COMPLETENESS_TOL);
        Ok(Self {
            dims,
            branches,
            trace_preserving,
        })
    }

    /// Branches `√p_k U_k` for a mixture of product unitaries.
    pub fn unitary_mixture(
        dims: Dims,
        probs: &[f64],
        unitaries: Vec<Vec<ComplexMatrix>>,
    ) -> Result<Self> {
        if probs.len() != unitaries.len() {
            return Err(Error::MalformedOperation(
                "one probability per branch".into(),
            ));
        }
        let branches = unitaries
            .into_iter()
            .zip(probs)
            .map(|(mut us, &p)| {
                if let Some(first) = us.first_mut() {
                    *first = first.scale_real(p.max(0.0).sqrt());
                }
                us
            })
            .collect();
        Self::new(dims, branches)
    }

    pub fn dims(&self) -> &Dims {
        &self.dims
    }

    pub fn branches(&self) -> &[Vec<ComplexMatrix>] {
        &self.branches
    }

    pub fn trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    pub fn branch_matrix(&self, k: usize) -> ComplexMatrix {
        kron_all(&self.branches[k])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchDeterminants {
    /// `Σ_k Π_i |det A_i^(k)|^{2/d}`.
    pub sum: f64,
    /// Per branch, `max_i ‖A_i† A_i / tr(A_i† A_i) - I/d_i‖_F`.
    pub unitarity_defects: Vec<f64>,
}

fn unitarity_defect(a: &ComplexMatrix) -> f64 {
    let d = a.rows();
    let g = &a.adjoint() * a;
    let tr = g.trace().re;
    if tr <= 0.0 {
        return (1.0 / d as f64).sqrt();
    }
    (&g.scale_real(1.0 / tr) - &ComplexMatrix::identity(d).scale_real(1.0 / d as f64))
        .frobenius_norm()
}

/// Determinant sum of a separable operation. Only defined when every
/// subsystem has the same dimension `d`, which then sets the exponent.
pub fn branch_determinant_sum(op: &SeparableOperation) -> Result<BranchDeterminants> {
    let dims = op.dims().as_slice();
    let d = dims[0];
    if dims.iter().any(|&x| x != d) {
        return Err(Error::InapplicableMethod(format!(
            "determinant sum needs equal subsystem dimensions, got {}",
            op.dims()
        )));
    }
    let exponent = 2.0 / d as f64;
    let mut sum = 0.0;
    let mut defects = Vec::with_capacity(op.branches().len());
    for branch in op.branches() {
        let mut term = 1.0;
        let mut defect = 0.0_f64;
        for a in branch {
            term *= det(a)?.norm().powf(exponent);
            defect = defect.max(unitarity_defect(a));
        }
        sum += term;
        defects.push(defect);
    }
    Ok(BranchDeterminants {
        sum,
        unitarity_defects: defects,
    })
}

/// Average entanglement after a separable operation against the
/// determinant sum: `Σ_k p_k E(σ_k) / E(ρ) <= Σ_k |det M_k|^{2/d}`.
pub fn check_l1_bound(
    kind: MeasureKind,
    rho: &DensityOperator,
    op: &SeparableOperation,
    config: &RoofConfig,
) -> Result<BoundCheck> {
    kind.check_dims(rho.dims())?;
    if op.dims() != rho.dims() {
        return Err(Error::DimensionMismatch(format!(
            "operation on {} but state on {}",
            op.dims(),
            rho.dims()
        )));
    }
    let bound = branch_determinant_sum(op)?.sum;
    let before = convex_roof(kind, rho, config)?.value;
    if before <= ENTANGLEMENT_THRESHOLD {
        return Err(Error::VanishingEntanglement(before));
    }
    let tr = rho.trace();
    let mut avg = 0.0;
    for k in 0..op.branches().len() {
        let m = op.branch_matrix(k);
        let out = (&(&m * rho.matrix()) * &m.adjoint()).hermitian_part();
        let p = out.trace().re / tr;
        if p < BRANCH_PROB_FLOOR {
            continue;
        }
        let sigma = DensityOperator::new(rho.dims().clone(), out.scale_real(1.0 / out.trace().re))?;
        let cfg = config
            .clone()
            .with_seed(config.seed.wrapping_add(k as u64 + 1));
        avg += p * convex_roof(kind, &sigma, &cfg)?.value;
    }
    let lhs = avg / before;
    Ok(BoundCheck {
        lhs,
        bound,
        holds: lhs <= bound + BOUND_SLACK,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryStatus {
    SymmetricViaUnitary,
    AsymmetricByEntropy,
    ZeroMeasureInconclusive,
    NoUnitaryFound,
}

impl SymmetryStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SymmetryStatus::SymmetricViaUnitary => "symmetric_via_unitary",
            SymmetryStatus::AsymmetricByEntropy => "asymmetric_by_entropy",
            SymmetryStatus::ZeroMeasureInconclusive => "zero_measure_inconclusive",
            SymmetryStatus::NoUnitaryFound => "no_unitary_found",
        }
    }
}

fn ser_perm<S: Serializer>(p: &Permutation, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&p.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryVerdict {
    #[serde(serialize_with = "ser_perm")]
    pub perm: Permutation,
    pub entanglement: f64,
    pub entropy_profile: Vec<f64>,
    pub permuted_entropy_profile: Vec<f64>,
    /// `U_1, ..., U_n` with `(⊗U_i) ρ (⊗U_i)† = V_P ρ V_P†`.
    #[serde(serialize_with = "crate::format::serialize_matrices")]
    pub product_unitary: Option<Vec<ComplexMatrix>>,
    /// Frobenius residual of the best product unitary, when a search ran.
    pub residual: Option<f64>,
    pub status: SymmetryStatus,
}

/// `‖(⊗U_i) ρ (⊗U_i)† - σ‖_F²`.
struct ConjugationObjective<'a> {
    dims: &'a Dims,
    rho: &'a ComplexMatrix,
    target: &'a ComplexMatrix,
}

impl ConjugationObjective<'_> {
    fn difference(&self, us: &[ComplexMatrix]) -> (ComplexMatrix, ComplexMatrix) {
        let w = kron_all(us);
        let d = &(&(&w * self.rho) * &w.adjoint()) - self.target;
        (w, d)
    }
}

impl UnitaryObjective for ConjugationObjective<'_> {
    fn factor_dims(&self) -> Vec<usize> {
        self.dims.as_slice().to_vec()
    }

    fn value(&self, us: &[ComplexMatrix]) -> f64 {
        self.difference(us).1.frobenius_norm().powi(2)
    }

    fn value_and_gradient(&self, us: &[ComplexMatrix]) -> (f64, Vec<ComplexMatrix>) {
        let (w, d) = self.difference(us);
        let f = d.frobenius_norm().powi(2);
        // full gradient 4 D W ρ, contracted against the other factors
        let g_adj = (&(&d * &w) * self.rho).scale_real(4.0).adjoint();
        let grads = (0..us.len())
            .map(|i| {
                let mut others = us.to_vec();
                others[i] = ComplexMatrix::identity(us[i].rows());
                let (gi, _) = partial_trace_matrix(&(&g_adj * &kron_all(&others)), self.dims, &[i])
                    .expect("valid slot");
                gi.adjoint()
            })
            .collect();
        (f, grads)
    }
}

fn profiles_match(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= ENTROPY_TOL)
}

/// Decides whether `V_P ρ V_P†` is reachable from `ρ`. For states with
/// nonzero entanglement only product unitaries can do this, so a differing
/// local-entropy profile rules it out and otherwise a product unitary is
/// searched for numerically.
pub fn check_p_symmetry(
    kind: MeasureKind,
    rho: &DensityOperator,
    perm: &Permutation,
    config: &RoofConfig,
) -> Result<SymmetryVerdict> {
    kind.check_dims(rho.dims())?;
    perm.check_dims(rho.dims())?;
    if !kind.is_permutation_invariant() {
        return Err(Error::InvalidPermutation(format!(
            "{} is not invariant under {perm}",
            kind.name()
        )));
    }
    let dims = rho.dims();
    let entanglement = convex_roof(kind, rho, config)?.value;
    let permuted = rho.permuted(perm)?;
    let entropy_profile = local_entropies(rho);
    let permuted_entropy_profile = local_entropies(&permuted);
    let identity: Vec<ComplexMatrix> = dims
        .as_slice()
        .iter()
        .map(|&d| ComplexMatrix::identity(d))
        .collect();
    let mut verdict = SymmetryVerdict {
        perm: perm.clone(),
        entanglement,
        entropy_profile,
        permuted_entropy_profile,
        product_unitary: None,
        residual: None,
        status: SymmetryStatus::NoUnitaryFound,
    };
    if perm.is_identity() {
        verdict.product_unitary = Some(identity);
        verdict.residual = Some(0.0);
        verdict.status = SymmetryStatus::SymmetricViaUnitary;
        return Ok(verdict);
    }
    if entanglement <= ENTANGLEMENT_THRESHOLD {
        verdict.status = SymmetryStatus::ZeroMeasureInconclusive;
        return Ok(verdict);
    }
    if !profiles_match(&verdict.entropy_profile, &verdict.permuted_entropy_profile) {
        verdict.status = SymmetryStatus::AsymmetricByEntropy;
        return Ok(verdict);
    }
    let obj = ConjugationObjective {
        dims,
        rho: rho.matrix(),
        target: permuted.matrix(),
    };
    let out = multistart(
        &obj,
        Some(identity),
        config.restarts,
        config.seed,
        0x5E,
        config.max_iter,
        0.0,
    );
    let residual = out.best.value.max(0.0).sqrt();
    verdict.residual = Some(residual);
    if residual < WITNESS_TOL {
        verdict.product_unitary = Some(out.best.unitaries);
        verdict.status = SymmetryStatus::SymmetricViaUnitary;
    }
    Ok(verdict)
}

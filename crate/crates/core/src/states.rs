//! Multipartite pure states and density operators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random::{gaussian_vector, seeded};
use crate::tensor::{
    apply_local_to_vector, hermitian_eig, partial_trace_matrix, reduced_from_vector, vec_norm,
    ComplexMatrix, Dims, Permutation, C64, EIG_CLAMP, HERMITIAN_TOL, ONE, ZERO,
};

/// Eigenvalues below this contribute nothing to the entropy.
pub const ENTROPY_CUTOFF: f64 = 1e-14;

/// A pure state (not necessarily normalized) on a multipartite space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawState")]
pub struct MultiState {
    dims: Dims,
    amplitudes: Vec<C64>,
}

#[derive(Deserialize)]
struct RawState {
    dims: Dims,
    amplitudes: Vec<C64>,
}

impl TryFrom<RawState> for MultiState {
    type Error = Error;
    fn try_from(raw: RawState) -> Result<Self> {
        Self::new(raw.dims, raw.amplitudes)
    }
}

impl MultiState {
    pub fn new(dims: Dims, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != dims.total() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for dims {dims}",
                amplitudes.len()
            )));
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(Self { dims, amplitudes })
    }

    /// Computational basis state `|i_1 ... i_n>`.
    pub fn basis(dims: Dims, digits: &[usize]) -> Result<Self> {
        if digits.len() != dims.len() || digits.iter().zip(dims.as_slice()).any(|(&i, &d)| i >= d) {
            return Err(Error::DimensionMismatch(format!(
                "basis label {digits:?} for dims {dims}"
            )));
        }
        let mut amps = vec![ZERO; dims.total()];
        amps[dims.join_index(digits)] = ONE;
        Self::new(dims, amps)
    }

    pub fn dims(&self) -> &Dims {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amplitudes)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-10
    }

    /// Returns the normalized state; fails on the zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::InvalidParameter(
                "cannot normalize the zero vector".into(),
            ));
        }
        Ok(self.scaled(1.0 / n))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dims: self.dims.clone(),
            amplitudes: self.amplitudes.iter().map(|z| z * s).collect(),
        }
    }

    /// Applies a local operator to subsystem `k`.
    pub fn apply_local(&self, op: &ComplexMatrix, k: usize) -> Result<Self> {
        let amps = apply_local_to_vector(&self.amplitudes, &self.dims, k, op)?;
        Ok(Self {
            dims: self.dims.clone(),
            amplitudes: amps,
        })
    }

    /// Applies one local operator per subsystem.
    pub fn apply_product(&self, ops: &[ComplexMatrix]) -> Result<Self> {
        if ops.len() != self.dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} local operators for {} subsystems",
                ops.len(),
                self.dims.len()
            )));
        }
        ops.iter()
            .enumerate()
            .try_fold(self.clone(), |s, (k, op)| s.apply_local(op, k))
    }

    pub fn permuted(&self, perm: &Permutation) -> Result<Self> {
        let amps = perm.apply_vector(&self.amplitudes, &self.dims)?;
        Ok(Self {
            dims: self.dims.clone(),
            amplitudes: amps,
        })
    }

    /// `|psi><psi|` as an operator (not validated as a density operator).
    pub fn projector_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    pub fn to_density(&self) -> Result<DensityOperator> {
        DensityOperator::new(self.dims.clone(), self.projector_matrix())
    }

    /// Reduced density matrix of subsystem `k` (unnormalized if the state is).
    pub fn reduced(&self, k: usize) -> Result<ComplexMatrix> {
        reduced_from_vector(&self.amplitudes, &self.dims, k)
    }

    /// Two-index coefficient matrix `A` with `psi = sum A_ij |ij>` (bipartite only).
    pub fn coefficient_matrix(&self) -> Result<ComplexMatrix> {
        match self.dims.as_slice() {
            &[d1, d2] => ComplexMatrix::new(d1, d2, self.amplitudes.clone()),
            _ => Err(Error::DimensionMismatch(
                "coefficient matrix needs two subsystems".into(),
            )),
        }
    }
}

/// Positive semidefinite operator with trace in `(0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDensity", into = "RawDensity")]
pub struct DensityOperator {
    dims: Dims,
    matrix: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct RawDensity {
    dims: Dims,
    matrix: Vec<Vec<C64>>,
}

impl TryFrom<RawDensity> for DensityOperator {
    type Error = Error;
    fn try_from(raw: RawDensity) -> Result<Self> {
        Self::new(raw.dims, ComplexMatrix::from_rows(&raw.matrix)?)
    }
}

impl From<DensityOperator> for RawDensity {
    fn from(d: DensityOperator) -> Self {
        RawDensity {
            dims: d.dims,
            matrix: d.matrix.to_rows(),
        }
    }
}

impl DensityOperator {
    /// Validates and hermitizes `matrix`. Eigenvalues in `[-1e-10, 0)` are
    /// accepted as drift; anything more negative is rejected.
    pub fn new(dims: Dims, matrix: ComplexMatrix) -> Result<Self> {
        let n = matrix.ensure_square()?;
        if n != dims.total() {
            return Err(Error::DimensionMismatch(format!(
                "operator side {n} but dims {dims} give {}",
                dims.total()
            )));
        }
        let residual = matrix.hermiticity_residual();
        if residual > HERMITIAN_TOL {
            return Err(Error::NotHermitian(residual));
        }
        let matrix = matrix.hermitian_part();
        let (vals, _) = hermitian_eig(&matrix)?;
        if let Some(&min) = vals.last() {
            if min < -EIG_CLAMP {
                return Err(Error::NegativeEigenvalue(min));
            }
        }
        let tr = matrix.trace().re;
        if !(tr > 0.0 && tr <= 1.0 + 1e-10) {
            return Err(Error::InvalidTrace(tr));
        }
        Ok(Self { dims, matrix })
    }

    /// Skips validation; only for operators known to be valid by construction.
    pub(crate) fn from_trusted(dims: Dims, matrix: ComplexMatrix) -> Self {
        Self {
            dims,
            matrix: matrix.hermitian_part(),
        }
    }

    pub fn maximally_mixed(dims: Dims) -> Self {
        let n = dims.total();
        Self {
            dims,
            matrix: ComplexMatrix::identity(n).scale_real(1.0 / n as f64),
        }
    }

    pub fn dims(&self) -> &Dims {
        &self.dims
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `rho / Tr rho`.
    pub fn normalized(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            matrix: self.matrix.scale_real(1.0 / self.trace()),
        }
    }

    /// `r * rho`; fails if the result leaves the admissible trace range.
    pub fn scaled(&self, r: f64) -> Result<Self> {
        Self::new(self.dims.clone(), self.matrix.scale_real(r))
    }

    /// Eigenvalues (descending, clamped at zero) and eigenvectors.
    pub fn spectrum(&self) -> (Vec<f64>, ComplexMatrix) {
        let (vals, vecs) = hermitian_eig(&self.matrix).expect("square by construction");
        (vals.into_iter().map(|v| v.max(0.0)).collect(), vecs)
    }

    pub fn rank(&self, threshold: f64) -> usize {
        self.spectrum().0.iter().filter(|&&v| v > threshold).count()
    }

    pub fn purity(&self) -> f64 {
        let m = &self.matrix;
        (m * m).trace().re / (self.trace() * self.trace())
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let (m, dims) = partial_trace_matrix(&self.matrix, &self.dims, keep)?;
        Ok(Self::from_trusted(dims, m))
    }

    pub fn permuted(&self, perm: &Permutation) -> Result<Self> {
        let m = perm.apply_matrix(&self.matrix, &self.dims)?;
        Ok(Self::from_trusted(self.dims.clone(), m))
    }

    /// Product `rho_1 ⊗ rho_2 ⊗ ...`.
    pub fn tensor_product(parts: &[DensityOperator]) -> Result<Self> {
        let dims: Vec<usize> = parts
            .iter()
            .flat_map(|p| p.dims.as_slice().to_vec())
            .collect();
        let mats: Vec<ComplexMatrix> = parts.iter().map(|p| p.matrix.clone()).collect();
        Self::new(Dims::new(dims)?, crate::tensor::kron_all(&mats))
    }
}

/// Canonical named states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedState {
    Bell,
    Ghz,
    W,
    MaxEntangled(usize),
}

/// `(|00>+|11>)/√2`, `(|000>+|111>)/√2`, `(|001>+|010>+|100>)/√3` or
/// `(1/√d) Σ_k |kk>`.
pub fn make_named_state(name: NamedState, dims: &Dims) -> Result<MultiState> {
    let mismatch = || Error::DimensionMismatch(format!("{name:?} is not defined on dims {dims}"));
    let amps = match name {
        NamedState::Bell => {
            if dims.as_slice() != [2, 2] {
                return Err(mismatch());
            }
            let s = std::f64::consts::FRAC_1_SQRT_2;
            vec![C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]
        }
        NamedState::Ghz => {
            if dims.as_slice() != [2, 2, 2] {
                return Err(mismatch());
            }
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let mut a = vec![ZERO; 8];
            a[0] = C64::new(s, 0.0);
            a[7] = C64::new(s, 0.0);
            a
        }
        NamedState::W => {
            if dims.as_slice() != [2, 2, 2] {
                return Err(mismatch());
            }
            let s = 1.0 / 3f64.sqrt();
            let mut a = vec![ZERO; 8];
            for i in [1, 2, 4] {
                a[i] = C64::new(s, 0.0);
            }
            a
        }
        NamedState::MaxEntangled(d) => {
            if dims.as_slice() != [d, d] {
                return Err(mismatch());
            }
            let s = 1.0 / (d as f64).sqrt();
            let mut a = vec![ZERO; d * d];
            for k in 0..d {
                a[k * d + k] = C64::new(s, 0.0);
            }
            a
        }
    };
    MultiState::new(dims.clone(), amps)
}

pub fn bell() -> MultiState {
    make_named_state(NamedState::Bell, &Dims::qubits(2)).expect("fixed dims")
}

pub fn ghz() -> MultiState {
    make_named_state(NamedState::Ghz, &Dims::qubits(3)).expect("fixed dims")
}

pub fn w_state() -> MultiState {
    make_named_state(NamedState::W, &Dims::qubits(3)).expect("fixed dims")
}

pub fn max_entangled(d: usize) -> Result<MultiState> {
    make_named_state(NamedState::MaxEntangled(d), &Dims::new(vec![d, d])?)
}

/// Haar-random normalized pure state, deterministic per seed.
pub fn random_pure(dims: &Dims, seed: u64) -> MultiState {
    let mut rng = seeded(seed, 0x5747);
    let v = gaussian_vector(&mut rng, dims.total());
    let n = vec_norm(&v);
    MultiState {
        dims: dims.clone(),
        amplitudes: v.into_iter().map(|z| z / n).collect(),
    }
}

/// Von Neumann entropy (nats) of `rho / Tr rho`.
pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    entropy_of_matrix(rho.matrix())
}

/// Entropy of the normalized spectrum of a positive semidefinite matrix.
pub(crate) fn entropy_of_matrix(m: &ComplexMatrix) -> f64 {
    let (vals, _) = hermitian_eig(m).expect("square");
    let tr: f64 = vals.iter().map(|v| v.max(0.0)).sum();
    vals.iter()
        .map(|&v| v / tr)
        .filter(|&p| p > ENTROPY_CUTOFF)
        .map(|p| -p * p.ln())
        .sum()
}

/// Either a pure or a mixed multipartite state.
#[derive(Clone, Copy, Debug)]
pub enum StateRef<'a> {
    Pure(&'a MultiState),
    Mixed(&'a DensityOperator),
}

impl<'a> From<&'a MultiState> for StateRef<'a> {
    fn from(s: &'a MultiState) -> Self {
        StateRef::Pure(s)
    }
}

impl<'a> From<&'a DensityOperator> for StateRef<'a> {
    fn from(s: &'a DensityOperator) -> Self {
        StateRef::Mixed(s)
    }
}

/// Entropy of every single-subsystem reduction.
pub fn local_entropies<'a>(state: impl Into<StateRef<'a>>) -> Vec<f64> {
    match state.into() {
        StateRef::Pure(psi) => (0..psi.dims().len())
            .map(|k| entropy_of_matrix(&psi.reduced(k).expect("valid slot")))
            .collect(),
        StateRef::Mixed(rho) => (0..rho.dims().len())
            .map(|k| {
                let (m, _) =
                    partial_trace_matrix(rho.matrix(), rho.dims(), &[k]).expect("valid slot");
                entropy_of_matrix(&m)
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn named_states() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(bell().amplitudes()[0].re, s);
        assert_eq!(ghz().amplitudes()[7].re, s);
        let w = w_state();
        for i in [1, 2, 4] {
            assert!((w.amplitudes()[i].re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }
        assert!(w.is_normalized());
        assert!(make_named_state(NamedState::Ghz, &Dims::qubits(2)).is_err());
        assert!(make_named_state(NamedState::MaxEntangled(3), &Dims::qubits(2)).is_err());
        assert!(max_entangled(4).unwrap().is_normalized());
    }

    #[test]
    fn random_pure_is_deterministic_and_normalized() {
        let dims = Dims::qubits(3);
        assert_eq!(random_pure(&dims, 11), random_pure(&dims, 11));
        assert_ne!(random_pure(&dims, 11), random_pure(&dims, 12));
        assert!((random_pure(&dims, 11).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_cases() {
        let pure = ghz().to_density().unwrap();
        assert!(von_neumann_entropy(&pure).abs() < 1e-10);
        let half = DensityOperator::maximally_mixed(Dims::qubits(1));
        assert!((von_neumann_entropy(&half) - LN_2).abs() < 1e-10);
        let d5 = DensityOperator::maximally_mixed(Dims::new(vec![5]).unwrap());
        assert!((von_neumann_entropy(&d5) - 5f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn local_entropy_profiles() {
        let e = local_entropies(&ghz());
        assert!(e.iter().all(|v| (v - LN_2).abs() < 1e-10));
        let zero = MultiState::basis(Dims::qubits(3), &[0, 0, 0]).unwrap();
        assert!(local_entropies(&zero).iter().all(|v| v.abs() < 1e-10));
        let b = bell();
        let prod: Vec<C64> = b.amplitudes().iter().flat_map(|&a| [a, ZERO]).collect();
        let psi = MultiState::new(Dims::qubits(3), prod).unwrap();
        let e = local_entropies(&psi);
        assert!((e[0] - LN_2).abs() < 1e-10 && (e[1] - LN_2).abs() < 1e-10 && e[2].abs() < 1e-10);
        let mixed = local_entropies(&psi.to_density().unwrap());
        assert!(e.iter().zip(&mixed).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn density_validation() {
        let dims = Dims::qubits(1);
        let neg = ComplexMatrix::from_real_diag(&[1.1, -0.1]);
        assert!(matches!(
            DensityOperator::new(dims.clone(), neg),
            Err(Error::NegativeEigenvalue(_))
        ));
        let drift = ComplexMatrix::from_real_diag(&[1.0, -5e-11]);
        assert!(DensityOperator::new(dims.clone(), drift).is_ok());
        let big = ComplexMatrix::from_real_diag(&[1.0, 0.5]);
        assert!(matches!(
            DensityOperator::new(dims.clone(), big),
            Err(Error::InvalidTrace(_))
        ));
        let zero = ComplexMatrix::zeros(2, 2);
        assert!(matches!(
            DensityOperator::new(dims.clone(), zero),
            Err(Error::InvalidTrace(_))
        ));
        let nonherm = ComplexMatrix::from_real(2, 2, &[0.5, 0.3, 0.0, 0.5]).unwrap();
        assert!(matches!(
            DensityOperator::new(dims, nonherm),
            Err(Error::NotHermitian(_))
        ));
        // subnormalized operators are admitted
        assert!(ghz().scaled(0.5).to_density().is_ok());
    }

    #[test]
    fn state_json_round_trip() {
        let g = ghz();
        let text = serde_json::to_string(&g).unwrap();
        assert!(text.starts_with("{\"dims\":[2,2,2],\"amplitudes\":[[0.7071067811865476,0.0]"));
        let back: MultiState = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
        let bad = r#"{"dims":[2,2],"amplitudes":[[1,0]]}"#;
        assert!(serde_json::from_str::<MultiState>(bad).is_err());
        let rho = bell().to_density().unwrap();
        let text = serde_json::to_string(&rho).unwrap();
        let back: DensityOperator = serde_json::from_str(&text).unwrap();
        assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }
}

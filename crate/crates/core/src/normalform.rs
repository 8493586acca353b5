//! Normal forms of pure states: the minimum-norm point of the SLOCC orbit,
//! reached by repeatedly filtering each subsystem with
//! `g_k = det(ρ_k)^{1/(2d_k)} ρ_k^{-1/2}` until every reduction is `I/d_k`.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::measures::{apply_slocc, SloccElement};
use crate::random::seeded;
use crate::states::MultiState;
use crate::tensor::{
    apply_local_to_vector, hermitian_eig, reduced_from_vector, vec_norm, ComplexMatrix, C64,
};

pub const DEFAULT_MAX_ITER: usize = 1000;
pub const DEFAULT_TOL: f64 = 1e-8;
/// Orbit norms below this count as reaching zero.
pub const NULL_CONE_NORM: f64 = 1e-8;
/// Reduced eigenvalues below this make the filter singular.
pub const EIGEN_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalFormResult {
    /// Normalized representative.
    pub state: MultiState,
    #[serde(serialize_with = "ser_slocc")]
    pub accumulated_g: SloccElement,
    /// Norm of `g |ψ>` before the first sweep and after every sweep.
    pub norm_trajectory: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub null_cone: bool,
}

fn ser_slocc<S: Serializer>(g: &SloccElement, s: S) -> std::result::Result<S::Ok, S::Error> {
    crate::format::serialize_matrices(&Some(g.factors().to_vec()), s)
}

fn reduction_gap(amps: &[C64], state: &MultiState) -> f64 {
    let dims = state.dims();
    (0..dims.len())
        .map(|k| {
            let d = dims.as_slice()[k];
            let rho = reduced_from_vector(amps, dims, k).expect("valid slot");
            (&rho - &ComplexMatrix::identity(d).scale_real(1.0 / d as f64)).frobenius_norm()
        })
        .fold(0.0, f64::max)
}

/// Local filtering sweep. `psi` must be normalized.
pub fn normal_form(psi: &MultiState, max_iter: usize, tol: f64) -> Result<NormalFormResult> {
    if !psi.is_normalized() {
        return Err(Error::InvalidParameter(format!(
            "state norm {} is not 1",
            psi.norm()
        )));
    }
    let dims = psi.dims().clone();
    let mut factors: Vec<ComplexMatrix> = dims
        .as_slice()
        .iter()
        .map(|&d| ComplexMatrix::identity(d))
        .collect();
    let mut amps = psi.amplitudes().to_vec();
    let mut norm = 1.0;
    let mut trajectory = vec![norm];
    let mut converged = false;
    let mut null_cone = false;
    let mut iterations = 0;

    'sweeps: loop {
        let unit: Vec<C64> = amps.iter().map(|z| z / norm).collect();
        if reduction_gap(&unit, psi) <= tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;
        for (k, &d) in dims.as_slice().iter().enumerate() {
            let current = vec_norm(&amps);
            let unit: Vec<C64> = amps.iter().map(|z| z / current).collect();
            let rho = reduced_from_vector(&unit, &dims, k)?;
            let (vals, vecs) = hermitian_eig(&rho)?;
            if vals[d - 1] < EIGEN_FLOOR {
                null_cone = true;
                norm = current;
                break 'sweeps;
            }
            let det_root = vals.iter().map(|v| v.ln()).sum::<f64>() / (2.0 * d as f64);
            let scales: Vec<C64> = vals
                .iter()
                .map(|v| C64::new((det_root - 0.5 * v.ln()).exp(), 0.0))
                .collect();
            let g = &(&vecs * &ComplexMatrix::from_diag(&scales)) * &vecs.adjoint();
            amps = apply_local_to_vector(&amps, &dims, k, &g)?;
            factors[k] = &g * &factors[k];
        }
        norm = vec_norm(&amps);
        trajectory.push(norm);
        if norm < NULL_CONE_NORM {
            null_cone = true;
            break;
        }
    }
    let state = MultiState::new(dims, amps.iter().map(|z| z / norm).collect())?;
    Ok(NormalFormResult {
        state,
        accumulated_g: SloccElement::from_factors_unchecked(factors),
        norm_trajectory: trajectory,
        iterations,
        converged,
        null_cone,
    })
}

/// Samples random determinant-one `g` and checks `‖g φ‖ >= 1 - 1e-9`.
pub fn verify_min_norm(result: &NormalFormResult, samples: usize, seed: u64) -> Result<bool> {
    if !result.converged {
        return Err(Error::NotConverged);
    }
    let mut rng = seeded(seed, 0x4E46);
    for _ in 0..samples {
        let g = SloccElement::random(&mut rng, result.state.dims());
        if apply_slocc(&g, &result.state)?.norm() < 1.0 - 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

//! Multistart local minimization over products of unitary groups.
//!
//! Each local run is a Riemannian conjugate-gradient descent: the search
//! direction is a skew-Hermitian generator `H` per factor and the update is
//! `U <- exp(-mu H) U`, which keeps every iterate exactly unitary. Step
//! lengths come from Armijo backtracking. Restarts are independent and may
//! run in parallel; their results are reduced in restart order, keeping the
//! lowest-indexed restart among equal values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::random::{haar_unitary, seeded};
use crate::tensor::{exp_from_eig, hermitian_eig, ComplexMatrix, C64};

/// A real objective on `U(n_1) x ... x U(n_k)`.
pub trait UnitaryObjective: Sync {
    fn factor_dims(&self) -> Vec<usize>;

    fn value(&self, us: &[ComplexMatrix]) -> f64;

    /// Value and Euclidean gradient `2 ∂f/∂conj(U)` for every factor.
    fn value_and_gradient(&self, us: &[ComplexMatrix]) -> (f64, Vec<ComplexMatrix>);
}

/// Shared optimizer configuration; serializes as the `RoofConfig` JSON object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoofConfig {
    /// Independent restarts per decomposition size.
    pub restarts: usize,
    /// Largest decomposition (or Kraus) count tried.
    pub max_decomp: usize,
    /// A run stops once the objective improves by less than `tol` over
    /// [`STALL_WINDOW`] iterations.
    pub tol: f64,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for RoofConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_decomp: 16,
            tol: 1e-10,
            seed: 0,
            max_iter: 3000,
        }
    }
}

impl RoofConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_max_decomp(mut self, max_decomp: usize) -> Self {
        self.max_decomp = max_decomp;
        self
    }
}

pub const STALL_WINDOW: usize = 50;

#[derive(Clone, Debug)]
pub struct LocalMinimum {
    pub value: f64,
    pub unitaries: Vec<ComplexMatrix>,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct MultistartOutcome {
    pub best: LocalMinimum,
    /// Index of the restart that produced `best`.
    pub best_restart: usize,
    /// Worst restart value minus best restart value.
    pub spread: f64,
    pub restarts: usize,
}

fn riemannian_gradient(g: &ComplexMatrix, u: &ComplexMatrix) -> ComplexMatrix {
    // G U^dag - U G^dag
    let gu = g * &u.adjoint();
    &gu - &gu.adjoint()
}

fn slope(grads: &[ComplexMatrix], dirs: &[ComplexMatrix], us: &[ComplexMatrix]) -> f64 {
    // d/dmu f(exp(-mu H) U) at mu = 0  =  Re Tr(G^dag (-H U))
    grads
        .iter()
        .zip(dirs)
        .zip(us)
        .map(|((g, h), u)| -g.real_inner(&(h * u)))
        .sum()
}

fn total_inner(a: &[ComplexMatrix], b: &[ComplexMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.real_inner(y)).sum()
}

/// Local descent from `start`.
pub fn minimize_from<O: UnitaryObjective + ?Sized>(
    obj: &O,
    start: Vec<ComplexMatrix>,
    max_iter: usize,
    tol: f64,
) -> LocalMinimum {
    const ARMIJO: f64 = 1e-4;
    const MAX_HALVINGS: usize = 60;

    let mut us = start;
    let (mut f, mut grads) = obj.value_and_gradient(&us);
    let mut omega: Vec<ComplexMatrix> = grads
        .iter()
        .zip(&us)
        .map(|(g, u)| riemannian_gradient(g, u))
        .collect();
    let mut dirs = omega.clone();
    let n_params: usize = obj.factor_dims().iter().map(|d| d * d).sum();
    let mut step = 0.0_f64;
    let mut history = vec![f];
    let mut since_reset = 0;
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let gnorm = total_inner(&omega, &omega).sqrt();
        if !gnorm.is_finite() || gnorm < 1e-15 || f == 0.0 {
            break;
        }
        let mut s = slope(&grads, &dirs, &us);
        if s >= 0.0 {
            dirs = omega.clone();
            since_reset = 0;
            s = slope(&grads, &dirs, &us);
            if s >= 0.0 {
                break;
            }
        }
        // spectra of i H, reused for every trial step
        let spectra: Vec<(Vec<f64>, ComplexMatrix)> = dirs
            .iter()
            .map(|h| hermitian_eig(&h.scale(C64::new(0.0, 1.0))).expect("square"))
            .collect();
        let lam_max = spectra
            .iter()
            .flat_map(|(v, _)| v.iter().map(|x| x.abs()))
            .fold(0.0, f64::max)
            .max(1e-300);
        let max_step = std::f64::consts::PI / lam_max;
        let mut mu = if step > 0.0 {
            (2.0 * step).min(max_step)
        } else {
            (1.0 / gnorm).min(max_step)
        };

        let trial = |mu: f64| -> Vec<ComplexMatrix> {
            spectra
                .iter()
                .zip(&us)
                .map(|((vals, vecs), u)| &exp_from_eig(vals, vecs, -mu) * u)
                .collect()
        };

        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand = trial(mu);
            let fc = obj.value(&cand);
            if fc <= f + ARMIJO * mu * s {
                accepted = Some(cand);
                break;
            }
            mu *= 0.5;
        }
        let Some(next) = accepted else {
            if since_reset == 0 {
                break;
            }
            dirs = omega.clone();
            since_reset = 0;
            continue;
        };
        step = mu;
        us = next;
        let (f_new, g_new) = obj.value_and_gradient(&us);
        let omega_new: Vec<ComplexMatrix> = g_new
            .iter()
            .zip(&us)
            .map(|(g, u)| riemannian_gradient(g, u))
            .collect();

        // Polak-Ribiere with automatic reset
        let denom = total_inner(&omega, &omega);
        let diff: Vec<ComplexMatrix> = omega_new.iter().zip(&omega).map(|(a, b)| a - b).collect();
        let mut gamma = if denom > 0.0 {
            total_inner(&diff, &omega_new) / denom
        } else {
            0.0
        };
        since_reset += 1;
        if gamma < 0.0 || !gamma.is_finite() || since_reset >= n_params.max(1) {
            gamma = 0.0;
            since_reset = 0;
        }
        dirs = omega_new
            .iter()
            .zip(&dirs)
            .map(|(o, h)| o + &h.scale_real(gamma))
            .collect();
        omega = omega_new;
        grads = g_new;
        f = f_new;
        history.push(f);
        if history.len() > STALL_WINDOW {
            let old = history[history.len() - 1 - STALL_WINDOW];
            if old - f < tol {
                break;
            }
        }
    }
    LocalMinimum {
        value: f,
        unitaries: us,
        iterations,
    }
}

/// Runs `restarts` local descents. Restart 0 starts from `warm` when given;
/// the others from Haar-random unitaries drawn from `(seed, stream_base + restart)`.
pub fn multistart<O: UnitaryObjective + ?Sized>(
    obj: &O,
    warm: Option<Vec<ComplexMatrix>>,
    restarts: usize,
    seed: u64,
    stream_base: u64,
    max_iter: usize,
    tol: f64,
) -> MultistartOutcome {
    multistart_with(
        &obj.factor_dims(),
        warm,
        restarts,
        seed,
        stream_base,
        |_, start| minimize_from(obj, start, max_iter, tol),
    )
}

/// [`multistart`] with a caller-supplied local solver, called with the
/// restart index and its starting point.
pub fn multistart_with<F>(
    dims: &[usize],
    warm: Option<Vec<ComplexMatrix>>,
    restarts: usize,
    seed: u64,
    stream_base: u64,
    local: F,
) -> MultistartOutcome
where
    F: Fn(usize, Vec<ComplexMatrix>) -> LocalMinimum + Sync,
{
    let restarts = restarts.max(1);
    let runs: Vec<LocalMinimum> = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let start = match (&warm, k) {
                (Some(w), 0) => w.clone(),
                _ => {
                    let mut rng = seeded(seed, stream_base.wrapping_add(k as u64));
                    dims.iter().map(|&d| haar_unitary(&mut rng, d)).collect()
                }
            };
            local(k, start)
        })
        .collect();
    let mut best_restart = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.value < runs[best_restart].value {
            best_restart = k;
        }
    }
    let worst = runs
        .iter()
        .map(|r| r.value)
        .fold(f64::NEG_INFINITY, f64::max);
    let best = runs[best_restart].clone();
    MultistartOutcome {
        spread: worst - best.value,
        best,
        best_restart,
        restarts,
    }
}

/// Embeds an `n x n` unitary as the leading block of an `m x m` unitary.
pub fn pad_unitary(u: &ComplexMatrix, m: usize) -> ComplexMatrix {
    let n = u.rows();
    ComplexMatrix::from_fn(m, m, |r, c| {
        if r < n && c < n {
            u[(r, c)]
        } else if r == c {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

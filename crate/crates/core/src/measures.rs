//! SL-invariant entanglement measures.
//!
//! Each measure is `scale * |P(psi)|^exponent` for a homogeneous polynomial
//! `P` of degree `k` with `k * exponent = 2`, so on unnormalized vectors the
//! value scales with the squared norm. That is what makes the pure-state
//! formulas degree-1 homogeneous on `|psi><psi|` and lets a decomposition
//! `rho = Σ_i |w_i><w_i|` be scored as `Σ_i E(w_i)` without normalizing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{minimize_from, multistart_with, pad_unitary, RoofConfig, UnitaryObjective};
use crate::states::{DensityOperator, MultiState};
use crate::tensor::{adjugate, det, hermitian_fn, kron, ComplexMatrix, Dims, C64, ZERO};

/// Numerical rank threshold for decompositions.
pub const RANK_THRESHOLD: f64 = 1e-10;

/// Terms below this modulus contribute exactly zero.
const TINY: f64 = 1e-300;

/// Decomposition sizes beyond the minimal count explored by the sweeps.
pub const EXTRA_OUTPUTS: usize = 4;

/// Cayley hyperdeterminant of a three-qubit amplitude vector `a_{ijk}`
/// (index `4i + 2j + k`), written as `d1 - 2 d2 + 4 d3`:
///
/// ```text
/// d1 = a000² a111² + a001² a110² + a010² a101² + a100² a011²
/// d2 = a000 a111 a011 a100 + a000 a111 a101 a010 + a000 a111 a110 a001
///    + a011 a100 a101 a010 + a011 a100 a110 a001 + a101 a010 a110 a001
/// d3 = a000 a110 a101 a011 + a111 a001 a010 a100
/// ```
///
/// The 3-tangle is `4 |d1 - 2 d2 + 4 d3|`.
pub const HYPERDET_TERMS: [(f64, [usize; 4]); 12] = [
    (1.0, [0, 0, 7, 7]),
    (1.0, [1, 1, 6, 6]),
    (1.0, [2, 2, 5, 5]),
    (1.0, [4, 4, 3, 3]),
    (-2.0, [0, 7, 3, 4]),
    (-2.0, [0, 7, 5, 2]),
    (-2.0, [0, 7, 6, 1]),
    (-2.0, [3, 4, 5, 2]),
    (-2.0, [3, 4, 6, 1]),
    (-2.0, [5, 2, 6, 1]),
    (4.0, [0, 6, 5, 3]),
    (4.0, [7, 1, 2, 4]),
];

/// Holomorphic invariant polynomial on a flattened vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Polynomial {
    /// Determinant of the vector read as a `d x d` row-major matrix.
    Det(usize),
    Hyperdet,
}

impl Polynomial {
    pub(crate) fn eval(&self, x: &[C64]) -> C64 {
        match *self {
            Polynomial::Det(2) => x[0] * x[3] - x[1] * x[2],
            Polynomial::Det(d) => {
                det(&ComplexMatrix::new(d, d, x.to_vec()).expect("d*d entries")).expect("square")
            }
            Polynomial::Hyperdet => HYPERDET_TERMS
                .iter()
                .map(|&(c, [i, j, k, l])| x[i] * x[j] * x[k] * x[l] * c)
                .sum(),
        }
    }

    /// Value and holomorphic gradient `∂P/∂x_k`.
    pub(crate) fn eval_grad(&self, x: &[C64]) -> (C64, Vec<C64>) {
        match *self {
            Polynomial::Det(2) => (x[0] * x[3] - x[1] * x[2], vec![x[3], -x[2], -x[1], x[0]]),
            Polynomial::Det(d) => {
                let m = ComplexMatrix::new(d, d, x.to_vec()).expect("d*d entries");
                let adj = adjugate(&m).expect("square");
                // ∂det/∂m_ab = adj_ba
                let grad = (0..d * d).map(|i| adj[(i % d, i / d)]).collect();
                (det(&m).expect("square"), grad)
            }
            Polynomial::Hyperdet => {
                let mut grad = vec![ZERO; 8];
                let mut value = ZERO;
                for &(c, idx) in &HYPERDET_TERMS {
                    let f = [x[idx[0]], x[idx[1]], x[idx[2]], x[idx[3]]];
                    value += f[0] * f[1] * f[2] * f[3] * c;
                    for p in 0..4 {
                        let mut rest = C64::new(c, 0.0);
                        for (q, &fq) in f.iter().enumerate() {
                            if q != p {
                                rest *= fq;
                            }
                        }
                        grad[idx[p]] += rest;
                    }
                }
                (value, grad)
            }
        }
    }
}

/// `scale * |P(x)|^exponent`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Invariant {
    pub poly: Polynomial,
    pub scale: f64,
    pub exponent: f64,
}

impl Invariant {
    pub(crate) fn value(&self, x: &[C64]) -> f64 {
        let p = self.poly.eval(x).norm();
        if p < TINY {
            0.0
        } else {
            self.scale * p.powf(self.exponent)
        }
    }

    /// Value and real gradient `2 ∂f/∂conj(x)`.
    pub(crate) fn value_grad(&self, x: &[C64]) -> (f64, Vec<C64>) {
        let (p, dp) = self.poly.eval_grad(x);
        let modulus = p.norm();
        if modulus < TINY {
            return (0.0, vec![ZERO; x.len()]);
        }
        let value = self.scale * modulus.powf(self.exponent);
        // 2 ∂/∂x̄ (P P̄)^{a/2} = a |P|^{a-2} P conj(∂P/∂x)
        let factor = p * (self.scale * self.exponent * modulus.powf(self.exponent - 2.0));
        (value, dp.iter().map(|g| factor * g.conj()).collect())
    }
}

/// The implemented SL-invariant measures, each tied to its dims pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    /// Two qubits: `2 |det A|` for the coefficient matrix `A`.
    Concurrence,
    /// Two qudits of equal dimension `d`: `d |det A|^{2/d}`.
    GConcurrence(usize),
    /// Three qubits: square root of the 3-tangle, `2 |Det|^{1/2}`.
    Srt,
}

impl MeasureKind {
    pub fn dims(&self) -> Dims {
        match *self {
            MeasureKind::Concurrence => Dims::qubits(2),
            MeasureKind::GConcurrence(d) => {
                Dims::new(vec![d, d]).expect("d >= 2 checked on construction")
            }
            MeasureKind::Srt => Dims::qubits(3),
        }
    }

    pub fn g_concurrence(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::KindMismatch(format!(
                "g_concurrence needs d >= 2, got {d}"
            )));
        }
        Ok(MeasureKind::GConcurrence(d))
    }

    /// Resolves a measure name against the dims of a state; `g_concurrence`
    /// takes its `d` from the dims.
    pub fn from_name(name: &str, dims: &Dims) -> Result<Self> {
        let kind = match name {
            "concurrence" => MeasureKind::Concurrence,
            "srt" => MeasureKind::Srt,
            "g_concurrence" | "g-concurrence" => match *dims.as_slice() {
                [d1, d2] if d1 == d2 => MeasureKind::GConcurrence(d1),
                [d1, d2] => {
                    return Err(Error::KindMismatch(format!(
                        "no SL-invariant measure exists for {d1}x{d2} with d1 != d2"
                    )))
                }
                _ => return Err(Error::KindMismatch(format!("g_concurrence on dims {dims}"))),
            },
            other => return Err(Error::KindMismatch(format!("unknown measure {other:?}"))),
        };
        kind.check_dims(dims)?;
        Ok(kind)
    }

    pub fn name(&self) -> &'static str {
        match self {
            MeasureKind::Concurrence => "concurrence",
            MeasureKind::GConcurrence(_) => "g_concurrence",
            MeasureKind::Srt => "srt",
        }
    }

    pub fn check_dims(&self, dims: &Dims) -> Result<()> {
        if let (MeasureKind::GConcurrence(_), &[d1, d2]) = (self, dims.as_slice()) {
            if d1 != d2 {
                return Err(Error::KindMismatch(format!(
                    "no SL-invariant measure exists for {d1}x{d2} with d1 != d2"
                )));
            }
        }
        if *dims != self.dims() {
            return Err(Error::KindMismatch(format!(
                "{} expects dims {}, got {dims}",
                self.name(),
                self.dims()
            )));
        }
        Ok(())
    }

    pub(crate) fn invariant(&self) -> Invariant {
        match *self {
            MeasureKind::Concurrence => Invariant {
                poly: Polynomial::Det(2),
                scale: 2.0,
                exponent: 1.0,
            },
            MeasureKind::GConcurrence(d) => Invariant {
                poly: Polynomial::Det(d),
                scale: d as f64,
                exponent: 2.0 / d as f64,
            },
            MeasureKind::Srt => Invariant {
                poly: Polynomial::Hyperdet,
                scale: 2.0,
                exponent: 0.5,
            },
        }
    }

    /// True when the measure is unchanged by every permutation of its subsystems.
    pub fn is_permutation_invariant(&self) -> bool {
        // det(A^T) = det(A) for the bipartite kinds; the 3-tangle is fully symmetric
        true
    }
}

/// Measure of a pure, possibly unnormalized, state.
pub fn measure_pure(kind: MeasureKind, psi: &MultiState) -> Result<f64> {
    kind.check_dims(psi.dims())?;
    Ok(kind.invariant().value(psi.amplitudes()))
}

/// Local invertible operation `A_1 ⊗ ... ⊗ A_n` with `det A_k = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SloccElement {
    factors: Vec<ComplexMatrix>,
}

impl SloccElement {
    pub fn new(factors: Vec<ComplexMatrix>) -> Result<Self> {
        for (k, f) in factors.iter().enumerate() {
            let d = det(f)?;
            if (d - C64::new(1.0, 0.0)).norm() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "factor {k} has determinant {d}, expected 1"
                )));
            }
        }
        Ok(Self { factors })
    }

    /// Rescales each invertible factor to unit determinant.
    pub fn normalize_from(factors: Vec<ComplexMatrix>) -> Result<Self> {
        let scaled = factors
            .into_iter()
            .map(|f| {
                let d = det(&f)?;
                if d.norm() < 1e-14 {
                    return Err(Error::InvalidParameter("singular factor".into()));
                }
                Ok(f.scale(d.powf(-1.0 / f.rows() as f64)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(scaled)
    }

    /// Skips the determinant check, for products of unit-determinant factors.
    pub(crate) fn from_factors_unchecked(factors: Vec<ComplexMatrix>) -> Self {
        Self { factors }
    }

    pub fn identity(dims: &Dims) -> Self {
        Self {
            factors: dims
                .as_slice()
                .iter()
                .map(|&d| ComplexMatrix::identity(d))
                .collect(),
        }
    }

    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R, dims: &Dims) -> Self {
        Self {
            factors: dims
                .as_slice()
                .iter()
                .map(|&d| crate::random::random_sl(rng, d))
                .collect(),
        }
    }

    pub fn factors(&self) -> &[ComplexMatrix] {
        &self.factors
    }

    /// `(self ∘ other)`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            factors: self
                .factors
                .iter()
                .zip(&other.factors)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn matrix(&self) -> ComplexMatrix {
        crate::tensor::kron_all(&self.factors)
    }
}

/// `(A_1 ⊗ ... ⊗ A_n) |psi>`, unnormalized.
pub fn apply_slocc(g: &SloccElement, psi: &MultiState) -> Result<MultiState> {
    if g.factors.len() != psi.dims().len()
        || g.factors
            .iter()
            .zip(psi.dims().as_slice())
            .any(|(f, &d)| f.rows() != d)
    {
        return Err(Error::DimensionMismatch(format!(
            "SLOCC element does not match dims {}",
            psi.dims()
        )));
    }
    psi.apply_product(&g.factors)
}

fn sigma_y_yy() -> ComplexMatrix {
    let sy = ComplexMatrix::new(
        2,
        2,
        vec![ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO],
    )
    .expect("2x2");
    kron(&sy, &sy)
}

/// Closed-form two-qubit concurrence, extended linearly in `Tr rho`.
pub fn wootters_concurrence(rho: &DensityOperator) -> Result<f64> {
    MeasureKind::Concurrence.check_dims(rho.dims())?;
    let tr = rho.trace();
    let r = rho.matrix().scale_real(1.0 / tr);
    // λ_i are the singular values of sqrt(ρ) (σy⊗σy) sqrt(ρ)*, i.e. the square
    // roots of the eigenvalues of ρ (σy⊗σy) ρ* (σy⊗σy), without squaring noise
    let sqrt_r = hermitian_fn(&r, |v| v.max(0.0).sqrt())?;
    let a = &(&sqrt_r * &sigma_y_yy()) * &sqrt_r.conj();
    let mut l: Vec<f64> = a.to_nalgebra().singular_values().iter().copied().collect();
    l.sort_by(|x, y| y.total_cmp(x));
    Ok(tr * (l[0] - l[1] - l[2] - l[3]).max(0.0))
}

/// Scores `Σ_i E(x_i)` for `x_i = Σ_j V_ij y_j`, where `V` is the leading
/// `r` columns of an `m x m` unitary. Shared by the convex roof and the
/// Kraus-mixing minimization.
pub(crate) struct MixingObjective {
    pub invariant: Invariant,
    /// The `r` fixed vectors `y_j`.
    pub vectors: Vec<Vec<C64>>,
    /// Output count `m`.
    pub outputs: usize,
}

impl MixingObjective {
    pub(crate) fn mixed_vectors(&self, u: &ComplexMatrix) -> Vec<Vec<C64>> {
        let len = self.vectors[0].len();
        (0..self.outputs)
            .map(|i| {
                let mut x = vec![ZERO; len];
                for (j, y) in self.vectors.iter().enumerate() {
                    let v = u[(i, j)];
                    if v == ZERO {
                        continue;
                    }
                    for (xk, yk) in x.iter_mut().zip(y) {
                        *xk += v * yk;
                    }
                }
                x
            })
            .collect()
    }
}

impl UnitaryObjective for MixingObjective {
    fn factor_dims(&self) -> Vec<usize> {
        vec![self.outputs]
    }

    fn value(&self, us: &[ComplexMatrix]) -> f64 {
        self.mixed_vectors(&us[0])
            .iter()
            .map(|x| self.invariant.value(x))
            .sum()
    }

    fn value_and_gradient(&self, us: &[ComplexMatrix]) -> (f64, Vec<ComplexMatrix>) {
        let m = self.outputs;
        let mut grad = ComplexMatrix::zeros(m, m);
        let mut total = 0.0;
        for (i, x) in self.mixed_vectors(&us[0]).iter().enumerate() {
            let (v, g) = self.invariant.value_grad(x);
            total += v;
            for (j, y) in self.vectors.iter().enumerate() {
                // 2 ∂f/∂conj(V_ij) = Σ_k g_k conj(y_k)
                grad[(i, j)] = g.iter().zip(y).map(|(gk, yk)| gk * yk.conj()).sum();
            }
        }
        (total, vec![grad])
    }
}

/// Best decomposition found over a sweep of output counts.
pub(crate) struct MixingSweep {
    pub value: f64,
    pub unitary: ComplexMatrix,
    pub outputs: usize,
    pub restarts_used: usize,
    pub spread: f64,
}

/// Minimizes a [`MixingObjective`] for every output count in `sizes`
/// (ascending). Each size is warm-started from the previous size's best
/// solution, so the best value never increases along the sweep.
pub(crate) fn sweep_mixing(
    invariant: Invariant,
    vectors: Vec<Vec<C64>>,
    sizes: impl IntoIterator<Item = usize>,
    config: &RoofConfig,
    stream_tag: u64,
) -> MixingSweep {
    let r = vectors.len();
    let mut best: Option<MixingSweep> = None;
    let mut restarts_used = 0;
    for m in sizes {
        let obj = MixingObjective {
            invariant,
            vectors: vectors.clone(),
            outputs: m,
        };
        let warm = match &best {
            Some(b) => pad_unitary(&b.unitary, m),
            None => ComplexMatrix::identity(m),
        };
        let smooth = MixingObjective {
            invariant: Invariant {
                exponent: 2.0,
                scale: 1.0,
                ..invariant
            },
            vectors: vectors.clone(),
            outputs: m,
        };
        let out = multistart_with(
            &[m],
            Some(vec![warm]),
            config.restarts,
            config.seed,
            stream_tag
                .wrapping_mul(1 << 20)
                .wrapping_add((m as u64) << 10),
            |k, start| {
                // the smooth Σ|P|² stage reaches exact zeros that the
                // non-smooth objective only creeps towards
                let pre = minimize_from(&smooth, start.clone(), config.max_iter, config.tol);
                let polished = minimize_from(&obj, pre.unitaries, config.max_iter, config.tol);
                if k == 0 {
                    let plain = minimize_from(&obj, start, config.max_iter, config.tol);
                    if plain.value <= polished.value {
                        return plain;
                    }
                }
                polished
            },
        );
        restarts_used += out.restarts;
        let improved = best.as_ref().is_none_or(|b| out.best.value < b.value);
        if improved {
            best = Some(MixingSweep {
                value: out.best.value,
                unitary: out.best.unitaries[0].clone(),
                outputs: m,
                restarts_used: 0,
                spread: out.spread,
            });
        }
        if best.as_ref().is_some_and(|b| b.value == 0.0) {
            break;
        }
    }
    let mut best = best.unwrap_or_else(|| MixingSweep {
        value: 0.0,
        unitary: ComplexMatrix::identity(r),
        outputs: r,
        restarts_used: 0,
        spread: 0.0,
    });
    best.restarts_used = restarts_used;
    best
}

/// Outcome of a convex-roof estimate.
#[derive(Clone, Debug)]
pub struct ConvexRoofResult {
    /// Best decomposition average found (an upper bound on the true roof).
    pub value: f64,
    /// Unnormalized members `|w_i>` with `Σ_i |w_i><w_i| = rho`.
    pub decomposition: Vec<MultiState>,
    pub restarts_used: usize,
    /// Worst minus best restart value at the winning decomposition size.
    pub spread: f64,
}

/// Convex-roof extension of `kind` evaluated at `rho` by multistart
/// minimization over decompositions `|w_i> = Σ_j V_ij √λ_j |e_j>`, for
/// `m` from the rank `r` up to `max(r², r + 4)`, capped by `max_decomp`.
pub fn convex_roof(
    kind: MeasureKind,
    rho: &DensityOperator,
    config: &RoofConfig,
) -> Result<ConvexRoofResult> {
    kind.check_dims(rho.dims())?;
    let dims = rho.dims().clone();
    let (vals, vecs) = rho.spectrum();
    let vectors: Vec<Vec<C64>> = vals
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > RANK_THRESHOLD)
        .map(|(j, &l)| vecs.column(j).into_iter().map(|z| z * l.sqrt()).collect())
        .collect();
    let r = vectors.len();
    let invariant = kind.invariant();
    if r <= 1 {
        let w = MultiState::new(
            dims,
            vectors
                .into_iter()
                .next()
                .unwrap_or_else(|| vec![ZERO; vals.len()]),
        )?;
        return Ok(ConvexRoofResult {
            value: invariant.value(w.amplitudes()),
            decomposition: vec![w],
            restarts_used: 0,
            spread: 0.0,
        });
    }
    let top = (r * r).max(r + EXTRA_OUTPUTS).min(config.max_decomp.max(r));
    let sweep = sweep_mixing(invariant, vectors.clone(), r..=top, config, 0xC0);
    let obj = MixingObjective {
        invariant,
        vectors,
        outputs: sweep.outputs,
    };
    let decomposition = obj
        .mixed_vectors(&sweep.unitary)
        .into_iter()
        .map(|x| MultiState::new(dims.clone(), x))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvexRoofResult {
        value: sweep.value,
        decomposition,
        restarts_used: sweep.restarts_used,
        spread: sweep.spread,
    })
}

/// Pure-state value if `rho` has rank one, otherwise the convex roof.
pub fn measure_mixed(kind: MeasureKind, rho: &DensityOperator, config: &RoofConfig) -> Result<f64> {
    Ok(convex_roof(kind, rho, config)?.value)
}

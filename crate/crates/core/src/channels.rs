//! Single-qudit channels in Kraus form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random::{haar_isometry, seeded};
use crate::states::{max_entangled, DensityOperator};
use crate::tensor::{embed_local, hermitian_eig, ComplexMatrix, C64, ZERO};

/// Completeness tolerance for `Σ K^dag K <= I`.
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Choi eigenvalues below this fraction of the Choi trace are dropped on
/// canonicalization; their Kraus operators have squared Frobenius norm of
/// that size, which is eigensolver noise.
pub const KRAUS_DROP: f64 = 1e-12;

/// A channel `rho -> Σ_j K_j rho K_j^dag` on a `d`-level system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChannel", into = "RawChannel")]
pub struct QuantumChannel {
    dim: usize,
    kraus: Vec<ComplexMatrix>,
    trace_preserving: bool,
}

#[derive(Serialize, Deserialize)]
struct RawChannel {
    dim: usize,
    kraus: Vec<Vec<Vec<C64>>>,
}

impl TryFrom<RawChannel> for QuantumChannel {
    type Error = Error;
    fn try_from(raw: RawChannel) -> Result<Self> {
        let kraus = raw
            .kraus
            .iter()
            .map(|rows| ComplexMatrix::from_rows(rows))
            .collect::<Result<Vec<_>>>()?;
        Self::new(raw.dim, kraus)
    }
}

impl From<QuantumChannel> for RawChannel {
    fn from(c: QuantumChannel) -> Self {
        RawChannel {
            dim: c.dim,
            kraus: c.kraus.iter().map(ComplexMatrix::to_rows).collect(),
        }
    }
}

fn completeness(dim: usize, kraus: &[ComplexMatrix]) -> ComplexMatrix {
    kraus.iter().fold(ComplexMatrix::zeros(dim, dim), |acc, k| {
        &acc + &(&k.adjoint() * k)
    })
}

impl QuantumChannel {
    /// Validates `Σ_j K_j^dag K_j <= I` and records whether equality holds.
    pub fn new(dim: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "channel dimension {dim} < 2"
            )));
        }
        if kraus.is_empty() {
            return Err(Error::InvalidParameter("no Kraus operators".into()));
        }
        if let Some(k) = kraus.iter().find(|k| k.rows() != dim || k.cols() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} Kraus operator for dimension {dim}",
                k.rows(),
                k.cols()
            )));
        }
        let sum = completeness(dim, &kraus);
        let excess = &sum - &ComplexMatrix::identity(dim);
        let (vals, _) = hermitian_eig(&excess)?;
        if vals[0] > COMPLETENESS_TOL {
            return Err(Error::NotTraceNonIncreasing(vals[0]));
        }
        let trace_preserving = excess.frobenius_norm() <= COMPLETENESS_TOL;
        Ok(Self {
            dim,
            kraus,
            trace_preserving,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    /// Unnormalized Choi matrix `Σ_j vec(K_j) vec(K_j)^dag` with row-major `vec`.
    fn choi_matrix(&self) -> ComplexMatrix {
        let n = self.dim * self.dim;
        let mut m = ComplexMatrix::zeros(n, n);
        for k in &self.kraus {
            m = &m + &ComplexMatrix::outer(k.data(), k.data());
        }
        m
    }

    /// Re-expresses the channel through the eigenvectors of its Choi matrix;
    /// the result has at most `d²` Kraus operators.
    pub fn canonical(&self) -> Self {
        let d = self.dim;
        let choi = self.choi_matrix();
        let cutoff = KRAUS_DROP * choi.trace().re.max(0.0);
        let (vals, vecs) = hermitian_eig(&choi).expect("square");
        let mut kraus: Vec<ComplexMatrix> = vals
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > cutoff)
            .map(|(j, &l)| {
                let col = vecs.column(j);
                ComplexMatrix::new(d, d, col.into_iter().map(|z| z * l.sqrt()).collect())
                    .expect("d*d")
            })
            .collect();
        if kraus.is_empty() {
            kraus.push(ComplexMatrix::zeros(d, d));
        }
        Self {
            dim: d,
            kraus,
            trace_preserving: self.trace_preserving,
        }
    }

    /// Kraus operators of `other ∘ self` (apply `self` first).
    pub fn then(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(
                "composing channels of different dimension".into(),
            ));
        }
        let kraus = other
            .kraus
            .iter()
            .flat_map(|b| self.kraus.iter().map(move |a| b * a))
            .collect();
        Self::new(self.dim, kraus).map(|c| c.canonical())
    }

    /// Applies the channel to a single-qudit operator.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        self.kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, k| {
                &acc + &(&(k * rho) * &k.adjoint())
            })
    }
}

/// Standard channel families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum ChannelFamily {
    Identity,
    Unitary { u: Vec<Vec<C64>> },
    Depolarizing { p: f64 },
    AmplitudeDamping { gamma: f64 },
    PhaseDamping { lambda: f64 },
    Random { seed: u64, env_dim: Option<usize> },
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) || !v.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} = {v} outside [0, 1]"
        )));
    }
    Ok(())
}

fn require_qubit(name: &str, d: usize) -> Result<()> {
    if d != 2 {
        return Err(Error::InvalidParameter(format!(
            "{name} is defined for qubits only, got d = {d}"
        )));
    }
    Ok(())
}

/// Generalized Pauli (Weyl) operator `X^a Z^b`.
fn weyl(d: usize, a: usize, b: usize) -> ComplexMatrix {
    let omega = 2.0 * std::f64::consts::PI / d as f64;
    ComplexMatrix::from_fn(d, d, |r, c| {
        if r == (c + a) % d {
            C64::from_polar(1.0, omega * (b * c) as f64)
        } else {
            ZERO
        }
    })
}

/// Builds the canonical Kraus set of a family on a `d`-level system.
pub fn make_channel(family: &ChannelFamily, d: usize) -> Result<QuantumChannel> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("dimension {d} < 2")));
    }
    let kraus = match family {
        ChannelFamily::Identity => vec![ComplexMatrix::identity(d)],
        ChannelFamily::Unitary { u } => {
            let u = ComplexMatrix::from_rows(u)?;
            if u.rows() != d || !u.is_square() {
                return Err(Error::DimensionMismatch(format!("unitary is not {d}x{d}")));
            }
            let defect = (&u.adjoint() * &u).max_abs_diff(&ComplexMatrix::identity(d));
            if defect > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "matrix is not unitary (defect {defect:e})"
                )));
            }
            vec![u]
        }
        ChannelFamily::Depolarizing { p } => {
            check_unit("p", *p)?;
            // (1-p) rho + p I/d  =  (1-p) rho + (p/d²) Σ_ab W_ab rho W_ab^dag
            let dd = (d * d) as f64;
            let mut ks = vec![ComplexMatrix::identity(d).scale_real((1.0 - p + p / dd).sqrt())];
            for a in 0..d {
                for b in 0..d {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    ks.push(weyl(d, a, b).scale_real((p / dd).sqrt()));
                }
            }
            ks
        }
        ChannelFamily::AmplitudeDamping { gamma } => {
            require_qubit("amplitude damping", d)?;
            check_unit("gamma", *gamma)?;
            let k0 = ComplexMatrix::from_real_diag(&[1.0, (1.0 - gamma).sqrt()]);
            let mut k1 = ComplexMatrix::zeros(2, 2);
            k1[(0, 1)] = C64::new(gamma.sqrt(), 0.0);
            vec![k0, k1]
        }
        ChannelFamily::PhaseDamping { lambda } => {
            require_qubit("phase damping", d)?;
            check_unit("lambda", *lambda)?;
            vec![
                ComplexMatrix::from_real_diag(&[1.0, (1.0 - lambda).sqrt()]),
                ComplexMatrix::from_real_diag(&[0.0, lambda.sqrt()]),
            ]
        }
        ChannelFamily::Random { seed, env_dim } => {
            let e = env_dim.unwrap_or(d * d);
            if e == 0 {
                return Err(Error::InvalidParameter(
                    "environment dimension must be positive".into(),
                ));
            }
            let mut rng = seeded(*seed, 0xC4A7);
            // isometry C^d -> C^e ⊗ C^d, K_j = (<j| ⊗ I) V
            let v = haar_isometry(&mut rng, e * d, d);
            (0..e)
                .map(|j| ComplexMatrix::from_fn(d, d, |r, c| v[(j * d + r, c)]))
                .collect()
        }
    };
    QuantumChannel::new(d, kraus)
}

/// `(I ⊗ ... ⊗ $ ⊗ ... ⊗ I)(rho)` with the channel on `subsystem`.
pub fn apply_local(
    channel: &QuantumChannel,
    rho: &DensityOperator,
    subsystem: usize,
) -> Result<DensityOperator> {
    let d = rho.dims().get(subsystem)?;
    if d != channel.dim() {
        return Err(Error::DimensionMismatch(format!(
            "channel of dimension {} on subsystem of dimension {d}",
            channel.dim()
        )));
    }
    let n = rho.dims().total();
    let mut out = ComplexMatrix::zeros(n, n);
    for k in channel.kraus() {
        let big = embed_local(k, rho.dims(), subsystem)?;
        out = &out + &(&(&big * rho.matrix()) * &big.adjoint());
    }
    if out.trace().re <= 0.0 {
        return Err(Error::InvalidTrace(out.trace().re));
    }
    Ok(DensityOperator::from_trusted(rho.dims().clone(), out))
}

/// Choi state `($ ⊗ I)(|ψ+><ψ+|)`.
pub fn choi_state(channel: &QuantumChannel) -> DensityOperator {
    let d = channel.dim();
    let phi = max_entangled(d)
        .expect("d >= 2")
        .to_density()
        .expect("pure state");
    apply_local(channel, &phi, 0).expect("dimensions agree")
}

/// New Kraus set `M_i = Σ_j V_ij K_j` for an `m' x m` isometry `V`; it
/// represents the same channel.
pub fn mix_kraus(channel: &QuantumChannel, isometry: &ComplexMatrix) -> Result<QuantumChannel> {
    let m = channel.kraus().len();
    if isometry.cols() != m {
        return Err(Error::DimensionMismatch(format!(
            "isometry has {} columns for {m} Kraus operators",
            isometry.cols()
        )));
    }
    let defect = (&isometry.adjoint() * isometry).max_abs_diff(&ComplexMatrix::identity(m));
    if defect > 1e-9 {
        return Err(Error::NotIsometry(defect));
    }
    let d = channel.dim();
    let kraus = (0..isometry.rows())
        .map(|i| {
            channel
                .kraus()
                .iter()
                .enumerate()
                .fold(ComplexMatrix::zeros(d, d), |acc, (j, k)| {
                    &acc + &k.scale(isometry[(i, j)])
                })
        })
        .collect();
    Ok(QuantumChannel {
        dim: d,
        kraus,
        trace_preserving: channel.trace_preserving,
    })
}

/// Single Kraus operator channel; convenient for trace-decreasing filters.
pub fn single_kraus(k: ComplexMatrix) -> Result<QuantumChannel> {
    let d = k.rows();
    QuantumChannel::new(d, vec![k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::haar_isometry;
    use crate::states::{bell, ghz};
    use crate::tensor::{kron, Dims};

    fn fully_depolarizing(d: usize) -> QuantumChannel {
        make_channel(&ChannelFamily::Depolarizing { p: 1.0 }, d).expect("valid")
    }

    #[test]
    fn identity_and_trivial_damping() {
        let id = make_channel(&ChannelFamily::Identity, 3).unwrap();
        assert_eq!(id.kraus().len(), 1);
        assert!(id.trace_preserving());
        let ad = make_channel(&ChannelFamily::AmplitudeDamping { gamma: 0.0 }, 2).unwrap();
        let rho = ghz().to_density().unwrap();
        let out = apply_local(&ad, &rho, 0).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-14);
        assert!(make_channel(&ChannelFamily::AmplitudeDamping { gamma: 0.5 }, 3).is_err());
        assert!(make_channel(&ChannelFamily::Depolarizing { p: 1.5 }, 2).is_err());
    }

    #[test]
    fn random_channels_are_complete() {
        for d in 2..5 {
            let c = make_channel(
                &ChannelFamily::Random {
                    seed: d as u64,
                    env_dim: None,
                },
                d,
            )
            .unwrap();
            let sum = completeness(d, c.kraus());
            assert!(sum.max_abs_diff(&ComplexMatrix::identity(d)) < 1e-10);
            assert!(c.trace_preserving());
            assert_eq!(c.kraus().len(), d * d);
        }
    }

    #[test]
    fn depolarizing_is_complete_for_qudits() {
        for d in 2..5 {
            let c = make_channel(&ChannelFamily::Depolarizing { p: 0.3 }, d).unwrap();
            assert!(c.trace_preserving());
            let rho = crate::random::random_density_matrix(&mut seeded(1, 1), d, d);
            let out = c.apply(&rho);
            let expect =
                &rho.scale_real(0.7) + &ComplexMatrix::identity(d).scale_real(0.3 / d as f64);
            assert!(out.max_abs_diff(&expect) < 1e-12);
        }
    }

    #[test]
    fn identity_channel_leaves_state_unchanged() {
        let id = make_channel(&ChannelFamily::Identity, 2).unwrap();
        let rho = ghz().to_density().unwrap();
        for k in 0..3 {
            let out = apply_local(&id, &rho, k).unwrap();
            assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-14);
        }
    }

    #[test]
    fn full_depolarizing_on_bell_factorizes() {
        let out = apply_local(&fully_depolarizing(2), &bell().to_density().unwrap(), 0).unwrap();
        assert!(
            out.matrix()
                .max_abs_diff(&ComplexMatrix::identity(4).scale_real(0.25))
                < 1e-14
        );
    }

    #[test]
    fn full_damping_resets_the_qubit() {
        let ad = make_channel(&ChannelFamily::AmplitudeDamping { gamma: 1.0 }, 2).unwrap();
        let rho = crate::states::random_pure(&Dims::qubits(3), 5)
            .to_density()
            .unwrap();
        let out = apply_local(&ad, &rho, 0).unwrap();
        let rest = rho.partial_trace(&[1, 2]).unwrap();
        let ground = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
        assert!(out.matrix().max_abs_diff(&kron(&ground, rest.matrix())) < 1e-14);
    }

    #[test]
    fn choi_states() {
        let id = make_channel(&ChannelFamily::Identity, 2).unwrap();
        assert!(
            choi_state(&id)
                .matrix()
                .max_abs_diff(&bell().projector_matrix())
                < 1e-14
        );
        let dep = choi_state(&fully_depolarizing(2));
        assert!(
            dep.matrix()
                .max_abs_diff(&ComplexMatrix::identity(4).scale_real(0.25))
                < 1e-14
        );
        let u = crate::random::haar_unitary(&mut seeded(4, 0), 3);
        let uc = make_channel(&ChannelFamily::Unitary { u: u.to_rows() }, 3).unwrap();
        assert!((choi_state(&uc).purity() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mixing_preserves_the_channel() {
        let c = make_channel(
            &ChannelFamily::Random {
                seed: 3,
                env_dim: Some(3),
            },
            2,
        )
        .unwrap();
        let v = haar_isometry(&mut seeded(2, 0), 5, 3);
        let mixed = mix_kraus(&c, &v).unwrap();
        assert_eq!(mixed.kraus().len(), 5);
        assert!(
            choi_state(&c)
                .matrix()
                .max_abs_diff(choi_state(&mixed).matrix())
                < 1e-10
        );
        let same = mix_kraus(&c, &ComplexMatrix::identity(3)).unwrap();
        assert_eq!(same.kraus(), c.kraus());
        let bad = ComplexMatrix::identity(3).scale_real(2.0);
        assert!(matches!(mix_kraus(&c, &bad), Err(Error::NotIsometry(_))));
    }

    #[test]
    fn padding_isometry_appends_zero_kraus() {
        let id = make_channel(&ChannelFamily::Identity, 2).unwrap();
        let pad = ComplexMatrix::from_real(2, 1, &[1.0, 0.0]).unwrap();
        let out = mix_kraus(&id, &pad).unwrap();
        assert_eq!(out.kraus().len(), 2);
        assert_eq!(out.kraus()[1], ComplexMatrix::zeros(2, 2));
    }

    #[test]
    fn canonical_form_is_small_and_equivalent() {
        let c = make_channel(
            &ChannelFamily::Random {
                seed: 9,
                env_dim: Some(7),
            },
            2,
        )
        .unwrap();
        let can = c.canonical();
        assert!(can.kraus().len() <= 4);
        assert!(
            choi_state(&c)
                .matrix()
                .max_abs_diff(choi_state(&can).matrix())
                < 1e-12
        );
        let ad = make_channel(&ChannelFamily::AmplitudeDamping { gamma: 0.3 }, 2).unwrap();
        assert_eq!(ad.canonical().kraus().len(), 2);
    }

    #[test]
    fn trace_increasing_sets_rejected() {
        let k = ComplexMatrix::identity(2).scale_real(1.1);
        assert!(matches!(
            single_kraus(k),
            Err(Error::NotTraceNonIncreasing(_))
        ));
        let filt = single_kraus(ComplexMatrix::from_real_diag(&[1.0, 0.5])).unwrap();
        assert!(!filt.trace_preserving());
    }

    #[test]
    fn channel_json_round_trip() {
        let c = make_channel(&ChannelFamily::AmplitudeDamping { gamma: 0.36 }, 2).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.starts_with("{\"dim\":2,\"kraus\":[[[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[0.8"));
        let back: QuantumChannel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}

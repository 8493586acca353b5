//! Entanglement resilience factor `F[$] = min Σ_i |det M_i|^{2/d}` over
//! Kraus representations `M_i = Σ_j V_ij K_j` of a channel, by three routes:
//! direct minimization over the mixing isometry, the Wootters formula on the
//! Choi state (qubits), and the convex-roof G-concurrence of the Choi state.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channels::{choi_state, QuantumChannel};
use crate::error::{Error, Result};
use crate::measures::{
    convex_roof, sweep_mixing, wootters_concurrence, Invariant, MeasureKind, Polynomial,
};
use crate::optim::RoofConfig;
use crate::tensor::{det, ComplexMatrix};

/// Headroom above the canonical Kraus count explored by [`erf_minimize`].
pub const EXTRA_KRAUS: usize = crate::measures::EXTRA_OUTPUTS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErfMethod {
    Auto,
    Minimize,
    ChoiConcurrence,
    ChoiGconcurrence,
}

impl ErfMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErfMethod::Auto => "auto",
            ErfMethod::Minimize => "minimize",
            ErfMethod::ChoiConcurrence => "choi_concurrence",
            ErfMethod::ChoiGconcurrence => "choi_gconcurrence",
        }
    }
}

impl fmt::Display for ErfMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErfMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(ErfMethod::Auto),
            "minimize" => Ok(ErfMethod::Minimize),
            "choi_concurrence" | "choi-concurrence" => Ok(ErfMethod::ChoiConcurrence),
            "choi_gconcurrence" | "choi-gconcurrence" => Ok(ErfMethod::ChoiGconcurrence),
            other => Err(Error::InapplicableMethod(format!(
                "unknown ERF method {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErfReport {
    pub value: f64,
    pub method: ErfMethod,
    pub restarts: usize,
    /// Optimal mixing isometry (`minimize` only).
    #[serde(skip)]
    pub best_isometry: Option<ComplexMatrix>,
    pub residual_spread: f64,
}

fn det_power(k: &ComplexMatrix, d: usize) -> f64 {
    let m = det(k).expect("square").norm();
    if m < 1e-300 {
        0.0
    } else {
        m.powf(2.0 / d as f64)
    }
}

/// `Σ_j |det K_j|^{2/d}` for the Kraus set as given (no minimization).
pub fn kraus_determinant_sum(channel: &QuantumChannel) -> f64 {
    channel
        .kraus()
        .iter()
        .map(|k| det_power(k, channel.dim()))
        .sum()
}

/// Direct minimization of `Σ_i |det M_i|^{2/d}` over mixing isometries,
/// sweeping the output count from the canonical Kraus count `m` up to
/// `min(m + d², m + 4, max(max_decomp, m))`.
pub fn erf_minimize(channel: &QuantumChannel, config: &RoofConfig) -> ErfReport {
    let d = channel.dim();
    let canonical = channel.canonical();
    let m = canonical.kraus().len();
    if m == 1 {
        return ErfReport {
            value: det_power(&canonical.kraus()[0], d),
            method: ErfMethod::Minimize,
            restarts: 0,
            best_isometry: Some(ComplexMatrix::identity(1)),
            residual_spread: 0.0,
        };
    }
    let invariant = Invariant {
        poly: Polynomial::Det(d),
        scale: 1.0,
        exponent: 2.0 / d as f64,
    };
    let vectors = canonical
        .kraus()
        .iter()
        .map(|k| k.data().to_vec())
        .collect();
    let top = (m + d * d)
        .min(m + EXTRA_KRAUS)
        .min(config.max_decomp.max(m));
    let sweep = sweep_mixing(invariant, vectors, m..=top, config, 0xE2F);
    ErfReport {
        value: sweep.value,
        method: ErfMethod::Minimize,
        restarts: sweep.restarts_used,
        best_isometry: Some(sweep.unitary.leading_columns(m)),
        residual_spread: sweep.spread,
    }
}

/// Closed form for qubit channels: Wootters concurrence of the Choi state.
pub fn erf_choi_concurrence(channel: &QuantumChannel) -> Result<ErfReport> {
    if channel.dim() != 2 {
        return Err(Error::InapplicableMethod(format!(
            "choi_concurrence needs a qubit channel, got d = {}",
            channel.dim()
        )));
    }
    Ok(ErfReport {
        value: wootters_concurrence(&choi_state(channel))?,
        method: ErfMethod::ChoiConcurrence,
        restarts: 0,
        best_isometry: None,
        residual_spread: 0.0,
    })
}

/// Convex-roof G-concurrence of the Choi state (any `d`).
pub fn erf_choi_gconcurrence(channel: &QuantumChannel, config: &RoofConfig) -> Result<ErfReport> {
    let kind = MeasureKind::g_concurrence(channel.dim())?;
    let roof = convex_roof(kind, &choi_state(channel), config)?;
    Ok(ErfReport {
        value: roof.value,
        method: ErfMethod::ChoiGconcurrence,
        restarts: roof.restarts_used,
        best_isometry: None,
        residual_spread: roof.spread,
    })
}

/// Dispatches on `method`; `auto` picks the closed form for qubits and
/// direct minimization otherwise.
pub fn erf(channel: &QuantumChannel, method: ErfMethod, config: &RoofConfig) -> Result<ErfReport> {
    match method {
        ErfMethod::Auto if channel.dim() == 2 => erf_choi_concurrence(channel),
        ErfMethod::Auto | ErfMethod::Minimize => Ok(erf_minimize(channel, config)),
        ErfMethod::ChoiConcurrence => erf_choi_concurrence(channel),
        ErfMethod::ChoiGconcurrence => erf_choi_gconcurrence(channel, config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{make_channel, mix_kraus, single_kraus, ChannelFamily};
    use crate::random::{haar_isometry, seeded};

    fn cfg() -> RoofConfig {
        RoofConfig::default().with_restarts(4)
    }

    #[test]
    fn identity_and_unitary_have_unit_erf() {
        for d in 2..4 {
            let id = make_channel(&ChannelFamily::Identity, d).unwrap();
            assert!((erf_minimize(&id, &cfg()).value - 1.0).abs() < 1e-12);
            let u = crate::random::haar_unitary(&mut seeded(d as u64, 0), d);
            let uc = make_channel(&ChannelFamily::Unitary { u: u.to_rows() }, d).unwrap();
            assert!((erf_minimize(&uc, &cfg()).value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn amplitude_damping_matches_closed_form() {
        for gamma in [0.25, 0.5, 0.75] {
            let c = make_channel(&ChannelFamily::AmplitudeDamping { gamma }, 2).unwrap();
            let expect = (1.0f64 - gamma).sqrt();
            assert!((erf_minimize(&c, &cfg()).value - expect).abs() < 2e-4);
            assert!((erf_choi_concurrence(&c).unwrap().value - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn depolarizing_closed_form() {
        for p in [0.0, 0.1, 0.3, 0.5, 0.66, 0.8, 1.0] {
            let c = make_channel(&ChannelFamily::Depolarizing { p }, 2).unwrap();
            let expect = (1.0 - 1.5 * p).max(0.0);
            let closed = erf_choi_concurrence(&c).unwrap().value;
            assert!((closed - expect).abs() < 1e-10, "p={p}: {closed}");
            let direct = erf_minimize(&c, &cfg()).value;
            assert!((direct - expect).abs() < 2e-4, "p={p}: {direct}");
        }
    }

    #[test]
    fn dispatcher() {
        let q = make_channel(&ChannelFamily::AmplitudeDamping { gamma: 0.5 }, 2).unwrap();
        assert_eq!(
            erf(&q, ErfMethod::Auto, &cfg()).unwrap().method,
            ErfMethod::ChoiConcurrence
        );
        let t = make_channel(&ChannelFamily::Depolarizing { p: 0.2 }, 3).unwrap();
        assert_eq!(
            erf(&t, ErfMethod::Auto, &cfg()).unwrap().method,
            ErfMethod::Minimize
        );
        assert!(matches!(
            erf(&t, ErfMethod::ChoiConcurrence, &cfg()),
            Err(Error::InapplicableMethod(_))
        ));
        let a = erf(&q, ErfMethod::Minimize, &cfg()).unwrap().value;
        let b = erf(&q, ErfMethod::ChoiConcurrence, &cfg()).unwrap().value;
        assert!((a - b).abs() < 2e-4);
    }

    #[test]
    fn single_kraus_value_is_exact() {
        let k = ComplexMatrix::from_real_diag(&[0.9, 0.4, 0.7]);
        let c = single_kraus(k).unwrap();
        let expect = (0.9f64 * 0.4 * 0.7).powf(2.0 / 3.0);
        assert!((erf_minimize(&c, &cfg()).value - expect).abs() < 1e-12);
        let singular = single_kraus(ComplexMatrix::from_real_diag(&[1.0, 1.0, 0.0])).unwrap();
        assert_eq!(erf_minimize(&singular, &cfg()).value, 0.0);
        assert_eq!(erf_choi_gconcurrence(&singular, &cfg()).unwrap().value, 0.0);
    }

    #[test]
    fn qutrit_identity_gconcurrence_route() {
        let id = make_channel(&ChannelFamily::Identity, 3).unwrap();
        assert!((erf_choi_gconcurrence(&id, &cfg()).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn minimum_is_independent_of_the_starting_representation() {
        let c = make_channel(
            &ChannelFamily::Random {
                seed: 4,
                env_dim: Some(3),
            },
            2,
        )
        .unwrap();
        let v = haar_isometry(&mut seeded(1, 2), 5, 3);
        let mixed = mix_kraus(&c, &v).unwrap();
        let a = erf_minimize(&c, &cfg()).value;
        let b = erf_minimize(&mixed, &cfg()).value;
        assert!((a - b).abs() < 2e-4);
        assert!(a <= kraus_determinant_sum(&c) + 1e-12);
    }

    #[test]
    fn report_json_fields() {
        let c = make_channel(&ChannelFamily::Identity, 2).unwrap();
        let r = erf(&c, ErfMethod::Auto, &cfg()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys.len(), 4);
        assert_eq!(v["method"], "choi_concurrence");
    }
}

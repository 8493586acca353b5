//! Entanglement decay under local channels: the state-independent
//! factorization `E[Λ(ψ)] / E[ψ] = F[$]` for pure states, the upper bounds
//! for mixed states and for products of channels, and the closed formula for
//! the SRT of a GHZ state sent through a single-qubit channel.

use std::fmt::Write as _;

use serde::Serialize;

use crate::channels::{apply_local, ChannelFamily, QuantumChannel};
use crate::erf::{erf, ErfMethod};
use crate::error::{Error, Result};
use crate::format::fmt_sig;
use crate::measures::{convex_roof, measure_pure, MeasureKind};
use crate::optim::RoofConfig;
use crate::states::{ghz, random_pure, DensityOperator, MultiState};

/// Measures at or below this are treated as zero.
pub const ENTANGLEMENT_THRESHOLD: f64 = 1e-6;
/// Slack for optimizer-vs-optimizer inequalities.
pub const BOUND_SLACK: f64 = 5e-3;

const ERF_SEED_OFFSET: u64 = 0x05ee_de2f;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorizationVerdict {
    pub psi_entanglement: f64,
    pub entanglement_after: f64,
    pub lhs_ratio: f64,
    pub erf_value: f64,
    pub abs_gap: f64,
    pub pass: bool,
}

fn erf_config(config: &RoofConfig) -> RoofConfig {
    config
        .clone()
        .with_seed(config.seed.wrapping_add(ERF_SEED_OFFSET))
}

/// Compares `E[($ on subsystem)(|ψ><ψ|)] / E(|ψ><ψ|)` with `F[$]`.
/// `psi` is normalized first; `pass` is `abs_gap <= tol`.
pub fn verify_factorization(
    kind: MeasureKind,
    psi: &MultiState,
    channel: &QuantumChannel,
    subsystem: usize,
    config: &RoofConfig,
    tol: f64,
) -> Result<FactorizationVerdict> {
    kind.check_dims(psi.dims())?;
    let psi = psi.normalized()?;
    let before = measure_pure(kind, &psi)?;
    if before <= ENTANGLEMENT_THRESHOLD {
        return Err(Error::VanishingEntanglement(before));
    }
    let rho = apply_local(channel, &psi.to_density()?, subsystem)?;
    let after = convex_roof(kind, &rho, config)?.value;
    let erf_value = erf(channel, ErfMethod::Auto, &erf_config(config))?.value;
    let lhs_ratio = after / before;
    let abs_gap = (lhs_ratio - erf_value).abs();
    Ok(FactorizationVerdict {
        psi_entanglement: before,
        entanglement_after: after,
        lhs_ratio,
        erf_value,
        abs_gap,
        pass: abs_gap <= tol,
    })
}

/// SRT of `($ ⊗ I ⊗ I)(|GHZ><GHZ|)` by convex roof, and the closed-form ERF.
/// The two agree when the factorization law holds.
pub fn ghz_srt_formula(channel: &QuantumChannel, config: &RoofConfig) -> Result<(f64, f64)> {
    if channel.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "qubit channel required, got d = {}",
            channel.dim()
        )));
    }
    let rho = apply_local(channel, &ghz().to_density()?, 0)?;
    let srt = convex_roof(MeasureKind::Srt, &rho, config)?.value;
    let erf_value = erf(channel, ErfMethod::ChoiConcurrence, config)?.value;
    Ok((srt, erf_value))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub bound: f64,
    pub holds: bool,
}

fn mixed_entanglement(
    kind: MeasureKind,
    rho: &DensityOperator,
    config: &RoofConfig,
) -> Result<f64> {
    let e = convex_roof(kind, rho, config)?.value;
    if e <= ENTANGLEMENT_THRESHOLD {
        return Err(Error::VanishingEntanglement(e));
    }
    Ok(e)
}

/// `E[Λ(ρ)] / E(ρ) <= F[$]` for a mixed input. Both sides of the ratio are
/// convex-roof estimates, so this is a heuristic check with explicit slack.
pub fn check_mixed_bound(
    kind: MeasureKind,
    rho: &DensityOperator,
    channel: &QuantumChannel,
    subsystem: usize,
    config: &RoofConfig,
) -> Result<BoundCheck> {
    kind.check_dims(rho.dims())?;
    let before = mixed_entanglement(kind, rho, config)?;
    let out = apply_local(channel, rho, subsystem)?;
    let after = convex_roof(
        kind,
        &out,
        &config.clone().with_seed(config.seed.wrapping_add(1)),
    )?
    .value;
    let bound = erf(channel, ErfMethod::Auto, &erf_config(config))?.value;
    let lhs = after / before;
    Ok(BoundCheck {
        lhs,
        bound,
        holds: lhs <= bound + BOUND_SLACK,
    })
}

/// `E[$_1 ⊗ ... ⊗ $_n (ρ)] / E(ρ) <= Π_k F[$_k]`.
pub fn check_product_bound(
    kind: MeasureKind,
    rho: &DensityOperator,
    channels: &[QuantumChannel],
    config: &RoofConfig,
) -> Result<BoundCheck> {
    kind.check_dims(rho.dims())?;
    if channels.len() != rho.dims().len() {
        return Err(Error::DimensionMismatch(format!(
            "{} channels for {} subsystems",
            channels.len(),
            rho.dims().len()
        )));
    }
    let before = mixed_entanglement(kind, rho, config)?;
    let mut out = rho.clone();
    let mut bound = 1.0;
    for (k, ch) in channels.iter().enumerate() {
        out = apply_local(ch, &out, k)?;
        bound *= erf(ch, ErfMethod::Auto, &erf_config(config))?.value;
    }
    let after = convex_roof(
        kind,
        &out,
        &config.clone().with_seed(config.seed.wrapping_add(1)),
    )?
    .value;
    let lhs = after / before;
    Ok(BoundCheck {
        lhs,
        bound,
        holds: lhs <= bound + BOUND_SLACK,
    })
}

/// Header comment identifying the batch CSV layout.
pub const CSV_VERSION_LINE: &str = "# erflab-csv-v1";
pub const CSV_COLUMNS: &str = "seed,dims,channel_family,param,E_before,E_after,ratio,erf,gap,pass";

/// One row of a batch verification.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchRow {
    pub seed: u64,
    pub dims: String,
    pub channel_family: String,
    pub param: f64,
    pub e_before: f64,
    pub e_after: f64,
    pub ratio: f64,
    pub erf: f64,
    pub gap: f64,
    pub pass: bool,
}

impl BatchRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.seed,
            self.dims,
            self.channel_family,
            fmt_sig(self.param),
            fmt_sig(self.e_before),
            fmt_sig(self.e_after),
            fmt_sig(self.ratio),
            fmt_sig(self.erf),
            fmt_sig(self.gap),
            self.pass
        )
    }
}

pub fn rows_to_csv(rows: &[BatchRow]) -> String {
    let mut out = String::new();
    writeln!(out, "{CSV_VERSION_LINE}").expect("string write");
    writeln!(out, "{CSV_COLUMNS}").expect("string write");
    for r in rows {
        writeln!(out, "{}", r.csv_line()).expect("string write");
    }
    out
}

/// A named one-parameter channel family, as used by batch sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepFamily {
    Identity,
    Depolarizing,
    AmplitudeDamping,
    PhaseDamping,
    /// Parameter is rounded to the channel seed.
    Random,
}

impl SweepFamily {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "identity" => SweepFamily::Identity,
            "depolarizing" => SweepFamily::Depolarizing,
            "amplitude_damping" | "amplitude-damping" => SweepFamily::AmplitudeDamping,
            "phase_damping" | "phase-damping" => SweepFamily::PhaseDamping,
            "random" => SweepFamily::Random,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown channel family {other:?}"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepFamily::Identity => "identity",
            SweepFamily::Depolarizing => "depolarizing",
            SweepFamily::AmplitudeDamping => "amplitude_damping",
            SweepFamily::PhaseDamping => "phase_damping",
            SweepFamily::Random => "random",
        }
    }

    pub fn family(&self, param: f64) -> ChannelFamily {
        match self {
            SweepFamily::Identity => ChannelFamily::Identity,
            SweepFamily::Depolarizing => ChannelFamily::Depolarizing { p: param },
            SweepFamily::AmplitudeDamping => ChannelFamily::AmplitudeDamping { gamma: param },
            SweepFamily::PhaseDamping => ChannelFamily::PhaseDamping { lambda: param },
            SweepFamily::Random => ChannelFamily::Random {
                seed: param.round().max(0.0) as u64,
                env_dim: None,
            },
        }
    }
}

/// Inclusive parameter grid `start:end:step`; the end point is included when
/// it lies within 1e-12 of a grid point.
pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let nums = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad range {spec:?}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    match nums.as_slice() {
        [v] => Ok(vec![*v]),
        [start, end, step] => {
            if *step <= 0.0 || end < start {
                return Err(Error::InvalidParameter(format!("bad range {spec:?}")));
            }
            let n = ((end - start) / step + 1e-12).floor() as usize;
            let mut v: Vec<f64> = (0..=n).map(|i| start + i as f64 * step).collect();
            if let Some(last) = v.last_mut() {
                if (*last - end).abs() <= 1e-12 {
                    *last = *end;
                }
            }
            Ok(v)
        }
        _ => Err(Error::InvalidParameter(format!("bad range {spec:?}"))),
    }
}

/// Runs [`verify_factorization`] for every `(trial, param)` pair. Trial `t`
/// uses the Haar-random state with seed `seed + t` and applies the channel to
/// subsystem 0. Rows are ordered by trial, then parameter.
pub fn batch_verify(
    kind: MeasureKind,
    trials: usize,
    seed: u64,
    family: SweepFamily,
    params: &[f64],
    config: &RoofConfig,
    tol: f64,
) -> Result<Vec<BatchRow>> {
    use rayon::prelude::*;
    let dims = kind.dims();
    let d0 = dims.as_slice()[0];
    let jobs: Vec<(usize, f64)> = (0..trials)
        .flat_map(|t| params.iter().map(move |&p| (t, p)))
        .collect();
    jobs.par_iter()
        .map(|&(t, p)| {
            let state_seed = seed.wrapping_add(t as u64);
            let psi = random_pure(&dims, state_seed);
            let channel = crate::channels::make_channel(&family.family(p), d0)?;
            let cfg = config
                .clone()
                .with_seed(config.seed.wrapping_add(state_seed));
            let v = verify_factorization(kind, &psi, &channel, 0, &cfg, tol)?;
            Ok(BatchRow {
                seed: state_seed,
                dims: dims.to_string(),
                channel_family: family.name().to_string(),
                param: p,
                e_before: v.psi_entanglement,
                e_after: v.entanglement_after,
                ratio: v.lhs_ratio,
                erf: v.erf_value,
                gap: v.abs_gap,
                pass: v.pass,
            })
        })
        .collect()
}

/// GHZ closed-formula sweep: `(param, srt, erf)` for each parameter.
pub fn ghz_sweep(
    family: SweepFamily,
    params: &[f64],
    config: &RoofConfig,
) -> Result<Vec<(f64, f64, f64)>> {
    params
        .iter()
        .map(|&p| {
            let ch = crate::channels::make_channel(&family.family(p), 2)?;
            let (srt, e) = ghz_srt_formula(&ch, config)?;
            Ok((p, srt, e))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::make_channel;
    use crate::states::w_state;
    use crate::tensor::Dims;

    fn cfg() -> RoofConfig {
        RoofConfig::default().with_restarts(4).with_max_decomp(6)
    }

    #[test]
    fn identity_channel_ratio_is_one() {
        let id = make_channel(&ChannelFamily::Identity, 2).unwrap();
        let psi = random_pure(&Dims::qubits(3), 3);
        let v = verify_factorization(MeasureKind::Srt, &psi, &id, 1, &cfg(), 1e-9).unwrap();
        assert!((v.lhs_ratio - 1.0).abs() < 1e-9 && v.abs_gap < 1e-9 && v.pass);
    }

    #[test]
    fn ghz_amplitude_damping_ratio() {
        let ad = make_channel(&ChannelFamily::AmplitudeDamping { gamma: 0.36 }, 2).unwrap();
        let v = verify_factorization(MeasureKind::Srt, &ghz(), &ad, 0, &cfg(), 2e-3).unwrap();
        assert!((v.lhs_ratio - 0.8).abs() < 2e-3);
        assert!(v.pass);
    }

    #[test]
    fn vanishing_entanglement_rejected() {
        let id = make_channel(&ChannelFamily::Identity, 2).unwrap();
        assert!(matches!(
            verify_factorization(MeasureKind::Srt, &w_state(), &id, 0, &cfg(), 1e-3),
            Err(Error::VanishingEntanglement(_))
        ));
    }

    #[test]
    fn ghz_formula_endpoints() {
        let id = make_channel(&ChannelFamily::Identity, 2).unwrap();
        let (s, e) = ghz_srt_formula(&id, &cfg()).unwrap();
        assert!((s - 1.0).abs() < 1e-12 && (e - 1.0).abs() < 1e-12);
        let dep = make_channel(&ChannelFamily::Depolarizing { p: 1.0 }, 2).unwrap();
        let (s, e) = ghz_srt_formula(&dep, &cfg()).unwrap();
        assert!(s < 1e-4 && e < 1e-4);
        let ad = make_channel(&ChannelFamily::AmplitudeDamping { gamma: 0.19 }, 2).unwrap();
        let (s, e) = ghz_srt_formula(&ad, &cfg()).unwrap();
        assert!((s - 0.9).abs() < 2e-3 && (e - 0.9).abs() < 1e-10);
    }

    #[test]
    fn product_bound_with_identities_and_full_depolarizing() {
        let rho = ghz().to_density().unwrap();
        let id = make_channel(&ChannelFamily::Identity, 2).unwrap();
        let b = check_product_bound(
            MeasureKind::Srt,
            &rho,
            &[id.clone(), id.clone(), id.clone()],
            &cfg(),
        )
        .unwrap();
        assert!((b.lhs - 1.0).abs() < 1e-9 && (b.bound - 1.0).abs() < 1e-12 && b.holds);
        let dep = make_channel(&ChannelFamily::Depolarizing { p: 1.0 }, 2).unwrap();
        let b =
            check_product_bound(MeasureKind::Srt, &rho, &[id.clone(), dep, id], &cfg()).unwrap();
        assert!(b.bound.abs() < 1e-12 && b.lhs < 1e-4);
    }

    #[test]
    fn mixed_bound_pure_case_is_tight() {
        let ad = make_channel(&ChannelFamily::AmplitudeDamping { gamma: 0.3 }, 2).unwrap();
        let rho = random_pure(&Dims::qubits(3), 8).to_density().unwrap();
        let b = check_mixed_bound(MeasureKind::Srt, &rho, &ad, 2, &cfg()).unwrap();
        assert!(b.holds && (b.lhs - b.bound).abs() < 5e-3);
    }

    #[test]
    fn ranges() {
        assert_eq!(
            parse_range("0:1:0.25").unwrap(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert_eq!(parse_range("0.1:0.3:0.1").unwrap().len(), 3);
        assert_eq!(parse_range("0.5").unwrap(), vec![0.5]);
        assert!(parse_range("1:0:0.1").is_err());
        assert!(parse_range("0:1:0").is_err());
        assert!(parse_range("a:b").is_err());
    }

    #[test]
    fn csv_layout() {
        let rows = batch_verify(
            MeasureKind::Srt,
            1,
            0,
            SweepFamily::Identity,
            &[0.0],
            &cfg(),
            5e-3,
        )
        .unwrap();
        let text = rows_to_csv(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_VERSION_LINE);
        assert_eq!(lines[1], CSV_COLUMNS);
        assert!(lines[2].starts_with("0,2x2x2,identity,0,"));
        assert!(lines[2].ends_with(",true"));
        assert_eq!(rows_to_csv(&[]).lines().count(), 2);
    }
}

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::Value;

use erflab::channels::{make_channel, ChannelFamily, QuantumChannel};
use erflab::erf::{erf, ErfMethod};
use erflab::evolution::{
    batch_verify, check_mixed_bound, ghz_sweep, parse_range, rows_to_csv, verify_factorization,
    SweepFamily, BOUND_SLACK, CSV_VERSION_LINE,
};
use erflab::format::{fmt_sig, round_sig};
use erflab::measures::{convex_roof, measure_pure, MeasureKind};
use erflab::normalform::{normal_form, DEFAULT_MAX_ITER, DEFAULT_TOL};
use erflab::symmetry::check_p_symmetry;
use erflab::{DensityOperator, Dims, Error, MultiState, Permutation, RoofConfig};

#[derive(Parser)]
#[command(
    name = "erflab",
    version,
    about = "SL-invariant entanglement measures and channel resilience factors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Optimizer restarts per decomposition size.
    #[arg(long, global = true)]
    restarts: Option<usize>,

    /// Largest decomposition size tried by the convex roof.
    #[arg(long, global = true)]
    max_decomp: Option<usize>,

    /// Pass tolerance (verify, evolve) or convergence tolerance (normal-form).
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Measure of a pure or mixed state.
    Measure {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        kind: String,
    },
    /// Entanglement resilience factor of a channel.
    Erf {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long, default_value = "auto")]
        method: String,
    },
    /// Apply a channel to one subsystem and compare the decay with the ERF.
    Evolve {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 0)]
        subsystem: usize,
    },
    /// Batch factorization check on random pure states.
    Verify {
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long)]
        family: String,
        /// Parameter grid `start:end:step` or a single value.
        #[arg(long, default_value = "0")]
        param: String,
        /// Local dimension for g_concurrence.
        #[arg(long, default_value_t = 3)]
        dim: usize,
    },
    /// Minimum-norm representative of the SLOCC orbit of a pure state.
    NormalForm {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
    },
    /// Whether the permuted state is reachable by local operations.
    Symmetry {
        #[arg(long)]
        state: PathBuf,
        /// One-based image list, e.g. `2,3,1`.
        #[arg(long)]
        perm: String,
        #[arg(long, default_value = "srt")]
        kind: String,
    },
    /// SRT of a GHZ state under a channel family, against the ERF.
    Sweep {
        #[arg(long)]
        family: String,
        #[arg(long)]
        param: String,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn parse(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidPermutation(_) => 5,
            Error::VanishingEntanglement(_) | Error::NotConverged => 4,
            Error::NotSquare { .. }
            | Error::DimensionMismatch(_)
            | Error::IndexOutOfRange { .. }
            | Error::InvalidDims(_)
            | Error::KindMismatch(_)
            | Error::InapplicableMethod(_) => 3,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

fn decode<T: for<'de> Deserialize<'de>>(v: Value, path: &Path) -> CliResult<T> {
    T::deserialize(v).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

enum State {
    Pure(MultiState),
    Mixed(DensityOperator),
}

impl State {
    fn dims(&self) -> &Dims {
        match self {
            State::Pure(s) => s.dims(),
            State::Mixed(r) => r.dims(),
        }
    }

    fn density(&self) -> CliResult<DensityOperator> {
        match self {
            State::Pure(s) => Ok(s.normalized()?.to_density()?),
            State::Mixed(r) => Ok(r.clone()),
        }
    }
}

fn load_state(path: &Path) -> CliResult<State> {
    let v = read_json(path)?;
    if v.get("amplitudes").is_some() {
        Ok(State::Pure(decode(v, path)?))
    } else if v.get("matrix").is_some() {
        Ok(State::Mixed(decode(v, path)?))
    } else {
        Err(Failure::parse(format!(
            "{}: expected \"amplitudes\" or \"matrix\"",
            path.display()
        )))
    }
}

/// Either an explicit Kraus set or a named family with an optional `dim`.
fn load_channel(path: &Path) -> CliResult<QuantumChannel> {
    let v = read_json(path)?;
    if v.get("kraus").is_some() {
        return decode(v, path);
    }
    let dim = match v.get("dim") {
        None => 2,
        Some(d) => d
            .as_u64()
            .ok_or_else(|| Failure::parse(format!("{}: dim must be an integer", path.display())))?
            as usize,
    };
    let family: ChannelFamily = decode(v, path)?;
    Ok(make_channel(&family, dim)?)
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if !n.is_i64() && !n.is_u64() => {
            let x = round_sig(n.as_f64().unwrap_or(f64::NAN));
            serde_json::Number::from_f64(x)
                .map(Value::Number)
                .unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => {
            Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect())
        }
        other => other,
    }
}

fn json_text(v: impl serde::Serialize) -> CliResult<String> {
    let v = serde_json::to_value(v).map_err(|e| Failure {
        code: 2,
        message: e.to_string(),
    })?;
    let mut s = serde_json::to_string_pretty(&round_value(v)).expect("serializable");
    s.push('\n');
    Ok(s)
}

fn config(cli: &Cli) -> RoofConfig {
    let mut c = RoofConfig::default().with_seed(cli.seed);
    if let Some(r) = cli.restarts {
        c = c.with_restarts(r);
    }
    if let Some(m) = cli.max_decomp {
        c = c.with_max_decomp(m);
    }
    c
}

fn run(cli: &Cli) -> CliResult<String> {
    let cfg = config(cli);
    let format = cli.format;
    match &cli.command {
        Command::Measure { state, kind } => {
            let state = load_state(state)?;
            let kind = MeasureKind::from_name(kind, state.dims())?;
            let (value, pure) = match &state {
                State::Pure(psi) => (measure_pure(kind, &psi.normalized()?)?, true),
                State::Mixed(rho) => (convex_roof(kind, rho, &cfg)?.value, false),
            };
            json_text(serde_json::json!({ "kind": kind.name(), "value": value, "pure": pure }))
        }
        Command::Erf { channel, method } => {
            let channel = load_channel(channel)?;
            let method: ErfMethod = method.parse()?;
            json_text(erf(&channel, method, &cfg)?)
        }
        Command::Evolve {
            state,
            channel,
            kind,
            subsystem,
        } => {
            let state = load_state(state)?;
            let channel = load_channel(channel)?;
            let kind = MeasureKind::from_name(kind, state.dims())?;
            match &state {
                State::Pure(psi) => {
                    let v = verify_factorization(
                        kind,
                        psi,
                        &channel,
                        *subsystem,
                        &cfg,
                        cli.tol.unwrap_or(BOUND_SLACK),
                    )?;
                    json_text(serde_json::json!({
                        "kind": kind.name(),
                        "E_before": v.psi_entanglement,
                        "E_after": v.entanglement_after,
                        "ratio": v.lhs_ratio,
                        "erf": v.erf_value,
                        "gap": v.abs_gap,
                        "pass": v.pass,
                    }))
                }
                State::Mixed(rho) => {
                    let b = check_mixed_bound(kind, rho, &channel, *subsystem, &cfg)?;
                    json_text(serde_json::json!({
                        "kind": kind.name(),
                        "ratio": b.lhs,
                        "erf": b.bound,
                        "pass": b.holds,
                    }))
                }
            }
        }
        Command::Verify {
            kind,
            trials,
            family,
            param,
            dim,
        } => {
            let dims = match kind.as_str() {
                "srt" => Dims::qubits(3),
                "concurrence" => Dims::qubits(2),
                _ => Dims::new(vec![*dim, *dim])?,
            };
            let kind = MeasureKind::from_name(kind, &dims)?;
            let family = SweepFamily::parse(family).map_err(|e| Failure::parse(e.to_string()))?;
            let params = parse_range(param).map_err(|e| Failure::parse(e.to_string()))?;
            let tol = cli.tol.unwrap_or(BOUND_SLACK);
            let rows =
                batch_verify(kind, *trials, cli.seed, family, &params, &cfg, tol).map_err(|e| {
                    Failure {
                        code: 4,
                        message: format!("trial failed: {e}"),
                    }
                })?;
            let max_gap = rows.iter().map(|r| r.gap).fold(0.0, f64::max);
            let passed = rows.iter().filter(|r| r.pass).count();
            if format == Some(Format::Json) {
                return json_text(
                    serde_json::json!({ "rows": rows, "max_gap": max_gap, "passed": passed }),
                );
            }
            let mut text = rows_to_csv(&rows);
            writeln!(
                text,
                "# rows={} passed={} max_gap={}",
                rows.len(),
                passed,
                fmt_sig(max_gap)
            )
            .expect("write");
            Ok(text)
        }
        Command::NormalForm { state, max_iter } => {
            let psi = match load_state(state)? {
                State::Pure(psi) => psi,
                State::Mixed(_) => {
                    return Err(Failure {
                        code: 3,
                        message: "normal form needs a pure state".into(),
                    })
                }
            };
            json_text(normal_form(
                &psi,
                *max_iter,
                cli.tol.unwrap_or(DEFAULT_TOL),
            )?)
        }
        Command::Symmetry { state, perm, kind } => {
            let state = load_state(state)?;
            let perm = Permutation::parse_one_based(perm)?;
            perm.check_dims(state.dims())?;
            let kind = MeasureKind::from_name(kind, state.dims())?;
            json_text(check_p_symmetry(kind, &state.density()?, &perm, &cfg)?)
        }
        Command::Sweep { family, param } => {
            let family = SweepFamily::parse(family).map_err(|e| Failure::parse(e.to_string()))?;
            let params = parse_range(param).map_err(|e| Failure::parse(e.to_string()))?;
            let points = ghz_sweep(family, &params, &cfg)?;
            if format == Some(Format::Json) {
                let rows: Vec<Value> = points
                    .iter()
                    .map(|&(p, s, e)| serde_json::json!({ "param": p, "srt": s, "erf": e, "gap": (s - e).abs() }))
                    .collect();
                return json_text(rows);
            }
            let mut text = format!("{CSV_VERSION_LINE}\nparam,srt,erf,gap\n");
            for (p, s, e) in points {
                writeln!(
                    text,
                    "{},{},{},{}",
                    fmt_sig(p),
                    fmt_sig(s),
                    fmt_sig(e),
                    fmt_sig((s - e).abs())
                )
                .expect("write");
            }
            Ok(text)
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("ERFLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        // a second initialization attempt is harmless
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let text = match run(&cli) {
        Ok(t) => t,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return ExitCode::from(f.code);
        }
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}

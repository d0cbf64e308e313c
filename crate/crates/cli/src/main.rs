use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bellwit::bounds::{
    gamma_producible_bound, mabk_producible_bound, producible_ns_bound, producible_quantum_bound, Partition,
};
use bellwit::certify::{
    certify_depth, certify_nonlocality_depth, counts_to_json, estimate, parse_counts, simulate_counts,
};
use bellwit::correl::{gamma_functional, mabk_functional, sliwa_functional, Behavior, BellFunctional};
use bellwit::localset::{facet_check_full_correlation, facet_check_local_polytope, local_bound};
use bellwit::quantum::{
    self, ansatz_value, cluster_linear, cluster_ring, gamma_ansatz_max, ghz, seesaw, seesaw_fixed_state, w_state,
    QuantumStrategy, SeesawOptions, StateVector, StrategyMeta, DEFAULT_SEED,
};
use bellwit::sdpexport::{export_membership_sdp, export_producible_sdp};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

mod tables;

/// Bell-inequality witnesses for entanglement and nonlocality depth.
#[derive(Parser, Debug)]
#[command(name = "bellwit", version)]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Seed for every random choice (see-saw restarts, simulated counts).
    #[arg(long, default_value_t = DEFAULT_SEED, global = true)]
    seed: u64,
    /// Worker threads for parallel restarts; 0 uses all cores.
    #[arg(long, default_value_t = 0, global = true)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Witness {
    Iota,
    Gamma,
    Mabk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BoundFamily {
    Iota,
    Gamma,
    Mabk,
    Ns,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub(crate) enum StateKind {
    Free,
    Ghz,
    W,
    ClusterLinear,
    ClusterRing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Space {
    Corr,
    Local,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DepthScale {
    Iota,
    Ns,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Curve {
    Ansatz,
    Boundary,
    Gamma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub(crate) enum TableId {
    /// Quantum maxima, critical visibilities and algebraic maxima.
    #[value(alias = "I")]
    Maxima,
    /// Optimal measurement angles.
    #[value(alias = "III")]
    Angles,
    /// MABK bounds for product states over partitions.
    #[value(alias = "IV")]
    Partitions,
    /// Best violations found for fixed states.
    #[value(alias = "V")]
    States,
    All,
}

#[derive(Args, Debug, Clone)]
struct SeesawArgs {
    /// Random restarts of the see-saw.
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    /// Restrict observables to traceless ones (no ±I).
    #[arg(long)]
    traceless: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Depth bound of a witness family for k-producible resources.
    Bound {
        #[arg(long, value_enum, default_value_t = BoundFamily::Iota)]
        family: BoundFamily,
        /// Number of parties; defaults to k.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 2.0)]
        gamma: f64,
        #[command(flatten)]
        seesaw: SeesawArgs,
    },
    /// Search for a quantum strategy maximizing a witness.
    Optimize {
        #[arg(long, value_enum, default_value_t = Witness::Iota)]
        witness: Witness,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        gamma: f64,
        /// Keep the state fixed instead of optimizing it.
        #[arg(long, value_enum, default_value_t = StateKind::Free)]
        state: StateKind,
        #[command(flatten)]
        seesaw: SeesawArgs,
        /// Write the strategy file here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Certify depth from measurement counts or a simulated strategy.
    Certify {
        /// Counts file.
        #[arg(long, conflicts_with = "strategy", required_unless_present = "strategy")]
        input: Option<PathBuf>,
        /// Strategy file to sample counts from.
        #[arg(long)]
        strategy: Option<PathBuf>,
        /// Shots per setting when sampling from a strategy.
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        /// Save the sampled counts here.
        #[arg(long, requires = "strategy")]
        save_counts: Option<PathBuf>,
        #[arg(long, default_value_t = bellwit::certify::DEFAULT_SIGMAS)]
        sigmas: f64,
        /// Compare against quantum (iota) or no-signaling (ns) group bounds.
        #[arg(long, value_enum, default_value_t = DepthScale::Iota)]
        witness: DepthScale,
    },
    /// Check whether a witness defines a facet of the local polytope.
    Facet {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Space::Corr)]
        space: Space,
        #[arg(long, value_enum, default_value_t = Witness::Iota)]
        witness: Witness,
        #[arg(long, default_value_t = 2.0)]
        gamma: f64,
    },
    /// Recompute the reference tables and compare with stored values.
    Tables {
        #[arg(long, value_enum, default_value_t = TableId::All)]
        table: TableId,
        /// Alternative reference data file.
        #[arg(long)]
        golden: Option<PathBuf>,
        #[command(flatten)]
        seesaw: SeesawArgs,
    },
    /// Write an SDPA problem for an external solver.
    ExportSdp {
        /// Group sizes, e.g. `2,1`, for a bound on split states.
        #[arg(long, value_delimiter = ',', conflicts_with = "behavior", required_unless_present = "behavior")]
        partition: Option<Vec<usize>>,
        #[arg(long, value_enum, default_value_t = Witness::Iota)]
        witness: Witness,
        #[arg(long, default_value_t = 2.0)]
        gamma: f64,
        /// Behavior file for a k-producibility membership test.
        #[arg(long, requires = "k")]
        behavior: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Sample a curve as CSV.
    Scan {
        #[arg(long, value_enum)]
        curve: Curve,
        #[arg(long)]
        n: usize,
        /// Fixed γ for the ansatz curve.
        #[arg(long, default_value_t = 2.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1001)]
        points: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Failure modes mapped onto exit codes.
pub(crate) enum Failure {
    /// Reproduced values disagree with the reference data (exit 1).
    Mismatch(String),
    /// Bad arguments or inputs, or a library error (exit 2).
    Error { kind: &'static str, message: String },
}

impl From<bellwit::Error> for Failure {
    fn from(e: bellwit::Error) -> Self {
        Failure::Error { kind: e.kind(), message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        bellwit::Error::from(e).into()
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure::Error { kind: "usage", message: message.into() }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report_error("usage", e.render().to_string().trim());
            return ExitCode::from(2);
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            report_error("usage", &e.to_string());
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Mismatch(msg)) => {
            log::error!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Error { kind, message }) => {
            report_error(kind, &message);
            ExitCode::from(2)
        }
    }
}

fn report_error(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
}

fn emit(format: Format, value: &impl Serialize, text: impl FnOnce() -> String) -> Result<(), Failure> {
    let out = match format {
        Format::Json => serde_json::to_string_pretty(value).map_err(bellwit::Error::from)? + "\n",
        Format::Text => text(),
    };
    write_out(None, &out)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn seesaw_options(seed: u64, args: &SeesawArgs) -> SeesawOptions {
    SeesawOptions { restarts: args.restarts, seed, trivial_observables: !args.traceless, ..SeesawOptions::default() }
}

pub(crate) fn witness_functional(w: Witness, n: usize, gamma: f64) -> bellwit::Result<BellFunctional> {
    match w {
        Witness::Iota => sliwa_functional(n),
        Witness::Gamma => gamma_functional(n, gamma),
        Witness::Mabk => mabk_functional(n),
    }
}

pub(crate) fn fixed_state(kind: StateKind, n: usize) -> bellwit::Result<Option<StateVector>> {
    Ok(match kind {
        StateKind::Free => None,
        StateKind::Ghz => Some(ghz(n)?),
        StateKind::W => Some(w_state(n)?),
        StateKind::ClusterLinear => Some(cluster_linear(n)?),
        StateKind::ClusterRing => Some(cluster_ring(n)?),
    })
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Bound { family, n, k, gamma, seesaw } => {
            let n = n.unwrap_or(*k);
            let (wb, exponent) = match family {
                BoundFamily::Iota => (producible_quantum_bound(n, *k)?, None),
                BoundFamily::Gamma => (gamma_producible_bound(n, *k, *gamma, &seesaw_options(cli.seed, seesaw))?, None),
                BoundFamily::Mabk => {
                    let (wb, e) = mabk_producible_bound(n, *k)?;
                    (wb, (*k > 1).then_some(e))
                }
                BoundFamily::Ns => (producible_ns_bound(*k)?, None),
            };
            let value = json!({ "bound": wb, "sqrt2_exponent": exponent });
            emit(cli.format, &value, || {
                format!(
                    "{:?} n={} k={}: {:.10}{}  ({})\n",
                    wb.family,
                    wb.n,
                    wb.k,
                    wb.bound,
                    if wb.valid { "" } else { "  [not a valid depth witness]" },
                    wb.note
                )
                .to_lowercase()
            })
        }
        Command::Optimize { witness, n, gamma, state, seesaw: args, output } => {
            let f = witness_functional(*witness, *n, *gamma)?;
            let opts = seesaw_options(cli.seed, args);
            let result = match fixed_state(*state, *n)? {
                Some(psi) => seesaw_fixed_state(&f, &psi, &opts)?,
                None => seesaw(&f, &opts)?,
            };
            let file = result.strategy.to_json(StrategyMeta {
                value: Some(result.value),
                seed: Some(cli.seed),
                functional: Some(f.name().to_string()),
            }) + "\n";
            let summary = format!(
                "{}: {:.10} (best of {} restarts, restart {}, seed {})\n",
                f.name(),
                result.value,
                opts.restarts,
                result.best_restart,
                cli.seed
            );
            match (output, cli.format) {
                (Some(path), _) => {
                    write_out(Some(path), &file)?;
                    write_out(None, &summary)
                }
                (None, Format::Json) => write_out(None, &file),
                (None, Format::Text) => write_out(None, &summary),
            }
        }
        Command::Certify { input, strategy, shots, save_counts, sigmas, witness } => {
            let records = match (input, strategy) {
                (Some(path), _) => parse_counts(&std::fs::read_to_string(path)?)?,
                (None, Some(path)) => {
                    let (s, _) = QuantumStrategy::from_json(&std::fs::read_to_string(path)?)?;
                    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
                    let records = simulate_counts(&quantum::behavior(&s)?, *shots, &mut rng)?;
                    if let Some(out) = save_counts {
                        write_out(Some(out), &(counts_to_json(&records)? + "\n"))?;
                    }
                    records
                }
                (None, None) => return Err(usage("certify needs --input or --strategy")),
            };
            let est = estimate(&records)?;
            let report = match witness {
                DepthScale::Iota => certify_depth(&est, *sigmas)?,
                DepthScale::Ns => certify_nonlocality_depth(&est, *sigmas)?,
            };
            emit(cli.format, &report, || report.to_text())
        }
        Command::Facet { n, space, witness, gamma } => {
            let f = witness_functional(*witness, *n, *gamma)?;
            let bound = local_bound(&f)?.value;
            let report = match space {
                Space::Corr => facet_check_full_correlation(&f, bound)?,
                Space::Local => facet_check_local_polytope(&f, bound)?,
            };
            // Facet reports are JSON regardless of the format flag.
            let value = json!({ "functional": f.name(), "local_bound": bound, "report": report });
            emit(Format::Json, &value, String::new)
        }
        Command::Tables { table, golden, seesaw: args } => {
            let data = match golden {
                Some(path) => std::fs::read_to_string(path)?,
                None => tables::GOLDEN.to_string(),
            };
            let rows = tables::reproduce(&data, *table, &seesaw_options(cli.seed, args))?;
            let failed = rows.iter().filter(|r| !r.ok).count();
            emit(cli.format, &rows, || tables::render(&rows))?;
            if failed > 0 {
                return Err(Failure::Mismatch(format!("{failed} entries outside tolerance")));
            }
            Ok(())
        }
        Command::ExportSdp { partition, witness, gamma, behavior, k, level, output } => {
            let (sidecar, what) = match (partition, behavior) {
                (Some(parts), _) => {
                    let p = Partition::new(parts.clone())?;
                    let f = witness_functional(*witness, p.total(), *gamma)?;
                    (export_producible_sdp(&f, &p, *level, output)?, format!("bound for {} on partition {p}", f.name()))
                }
                (None, Some(path)) => {
                    let b = Behavior::from_json(&std::fs::read_to_string(path)?)?;
                    let k = k.ok_or_else(|| usage("--behavior needs --k"))?;
                    (export_membership_sdp(&b, k, *level, output)?, format!("{k}-producibility membership"))
                }
                (None, None) => return Err(usage("export-sdp needs --partition or --behavior")),
            };
            let value = json!({ "problem": what, "sdpa": output, "variables": sidecar });
            emit(cli.format, &value, || {
                format!("{what}\n  sdpa      {}\n  variables {}\n", output.display(), sidecar.display())
            })
        }
        Command::Scan { curve, n, gamma, points, output } => {
            let csv = scan(*curve, *n, *gamma, *points)?;
            write_out(output.as_deref(), &csv)
        }
    }
}

fn scan(curve: Curve, n: usize, gamma: f64, points: usize) -> Result<String, Failure> {
    if points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    if n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let t = |i: usize| i as f64 / (points - 1) as f64;
    let pi = std::f64::consts::PI;
    let mut out = String::new();
    match curve {
        Curve::Ansatz => {
            gamma_functional(n, gamma)?;
            out.push_str("phi,value\n");
            for i in 0..points {
                let phi = pi * t(i);
                let v = if gamma == 2.0 { ansatz_value(n, phi) } else { quantum::gamma_ansatz_value(n, gamma, phi) };
                out.push_str(&format!("{phi},{v}\n"));
            }
        }
        Curve::Boundary => {
            // The GHZ ansatz traces ζ from 1 down to −1 on [0, 2π/(n+1)].
            out.push_str("phi,zeta,mu\n");
            let m = n as f64 + 1.0;
            for i in 0..points {
                let phi = 2.0 * pi / m * t(i);
                let zeta = (m * phi / 2.0).cos();
                let mu = (phi / 2.0).cos().powi(n as i32 + 1);
                out.push_str(&format!("{phi},{zeta},{mu}\n"));
            }
        }
        Curve::Gamma => {
            out.push_str("gamma,phi,value\n");
            for i in 1..points {
                let g = 2.0 * t(i);
                let q = gamma_ansatz_max(n, g)?;
                out.push_str(&format!("{g},{},{}\n", q.phi, q.value));
            }
        }
    }
    Ok(out)
}

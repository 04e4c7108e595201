use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use asymptotica::cli::{self, AnalyzeOptions, Outcome, RoundTripSource};
use asymptotica::Tolerances;

#[derive(Parser)]
#[command(name = "asymptotica", version, about = "Asymptotic structure of quantum channels (Heisenberg picture)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    tol: TolArgs,
    /// Seed for all randomized checks.
    #[arg(long, global = true, env = "ASYMPTOTICA_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TolArgs {
    /// JSON file with tolerance overrides (keys: mat, eig, cluster, per, supp, faith, alg).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    eps_mat: Option<f64>,
    #[arg(long, global = true)]
    eps_eig: Option<f64>,
    #[arg(long, global = true)]
    eps_cluster: Option<f64>,
    #[arg(long, global = true)]
    eps_per: Option<f64>,
    #[arg(long, global = true)]
    eps_supp: Option<f64>,
    #[arg(long, global = true)]
    eps_faith: Option<f64>,
    #[arg(long, global = true)]
    eps_alg: Option<f64>,
}

impl TolArgs {
    fn resolve(&self) -> asymptotica::Result<Tolerances> {
        let mut t = cli::load_tolerances(self.config.as_deref())?;
        let overrides = [
            (&mut t.mat, self.eps_mat),
            (&mut t.eig, self.eps_eig),
            (&mut t.cluster, self.eps_cluster),
            (&mut t.per, self.eps_per),
            (&mut t.supp, self.eps_supp),
            (&mut t.faith, self.eps_faith),
            (&mut t.alg, self.eps_alg),
        ];
        for (slot, v) in overrides {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(asymptotica::Error::Validation(format!("tolerance {v} must be positive")));
                }
                *slot = v;
            }
        }
        Ok(t)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Full analysis of a channel file; JSON report on stdout or to --out.
    Analyze {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Omit wall-clock timings so reports are byte-reproducible.
        #[arg(long)]
        no_timings: bool,
    },
    /// Build a channel from an unfolding spec and write it with a ground-truth sidecar.
    Synthesize {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Sidecar path (default: <out stem>.truth.json).
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Present the channel in a Haar-random basis drawn from the unfold spec seed.
        #[arg(long)]
        rotate: bool,
    },
    /// Synthesize, analyze and compare against the declared structure.
    Roundtrip {
        spec: Option<PathBuf>,
        /// Number of random specs.
        #[arg(long, conflicts_with_all = ["spec", "channel"])]
        random: Option<usize>,
        #[arg(long, default_value_t = 8)]
        dmax: usize,
        /// Existing channel file to check against --truth.
        #[arg(long, requires = "truth", conflicts_with = "spec")]
        channel: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Spectrum fragment of a channel file.
    Spectrum { file: PathBuf },
}

fn emit(o: Outcome) -> ExitCode {
    if let Some(text) = &o.stdout {
        let mut out = std::io::stdout().lock();
        let _ = out.write_all(text.as_bytes());
    }
    if !o.summary.is_empty() {
        eprintln!("{}", o.summary);
    }
    ExitCode::from(o.code as u8)
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let tol = match args.tol.resolve() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(cli::EXIT_INPUT as u8);
        }
    };
    let outcome = match args.command {
        Command::Analyze { file, out, no_timings } => {
            let opts = AnalyzeOptions { seed: args.seed, tol, timings: !no_timings, ..Default::default() };
            cli::cmd_analyze(&file, out.as_deref(), &opts)
        }
        Command::Synthesize { spec, out, truth, rotate } => cli::cmd_synthesize(&spec, &out, truth.as_deref(), rotate, &tol),
        Command::Roundtrip { spec, random, dmax, channel, truth, jobs } => {
            let source = match (spec, random, channel, truth) {
                (_, Some(count), _, _) => RoundTripSource::Random { count, d_max: dmax, seed: args.seed },
                (_, None, Some(channel), Some(truth)) => RoundTripSource::Sidecar { channel, truth },
                (Some(p), None, None, _) => RoundTripSource::Spec(p),
                _ => {
                    eprintln!("error: roundtrip needs a spec file, --random <n>, or --channel with --truth");
                    return ExitCode::from(cli::EXIT_INPUT as u8);
                }
            };
            cli::cmd_roundtrip(&source, jobs, &tol, args.seed)
        }
        Command::Spectrum { file } => cli::cmd_spectrum(&file, &tol),
    };
    emit(outcome)
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use phopfield::commands::bench::{bench_scaling, BenchOptions};
use phopfield::commands::validate::{validate, ValidateOptions, DEFAULT_FAST_PATH};
use phopfield::commands::{analyze, phase, run, selfcorr};
use phopfield::store::write_csv;
use phopfield::{CliError, CliResult, Preset, RunConfig};

#[derive(Parser)]
#[command(name = "phopfield", version, about = "Photonic multiphoton p-body Hopfield simulator")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON run configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Overrides output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides master_seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match (&self.config, self.preset) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(p)) => RunConfig::preset(p),
            (None, None) => return Err(CliError::Config("give --config PATH or --preset {paper|desk}".into())),
        };
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Oracle equivalence checks on small random instances.
    Validate {
        #[arg(long, default_value_t = 6)]
        max_m: usize,
        #[arg(long, default_value_t = 3)]
        max_nph: usize,
        #[arg(long, default_value_t = 20)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exchange Monte Carlo for every disorder sample; resumes an interrupted run.
    Run(ConfigArgs),
    /// Self-correlation F(τ) per temperature of a finished run.
    Selfcorr {
        /// Run directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,1,10,100,1000")]
        taus: Vec<usize>,
    },
    /// P(q), P(m) and phase labels over an (α, T) grid.
    PhaseDiagram(ConfigArgs),
    /// Per-flip cost against the number of planted channels.
    BenchScaling {
        #[arg(long, default_value_t = 50)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        nph: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,25,50")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 400_000)]
        flips: usize,
        /// Writes bench_scaling.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recomputes summaries and histograms of a run directory.
    Analyze {
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Validate { max_m, max_nph, cases, seed } => {
            let opts = ValidateOptions { max_modes: max_m, max_photons: max_nph, n_cases: cases, seed, ..Default::default() };
            let report = validate(&opts, DEFAULT_FAST_PATH)?;
            print!("{}", report.render());
            if !report.passed() {
                return Err(CliError::Check("oracle equivalence".into()));
            }
        }
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let outcome = run::run(&cfg)?;
            println!(
                "run complete in {}: {} samples simulated, {} resumed",
                outcome.output_dir.display(),
                outcome.simulated.len(),
                outcome.resumed.len()
            );
        }
        Command::Selfcorr { out, taus } => {
            let rows = selfcorr::selfcorr(&out, &taus)?;
            println!("{:>10} {:>8} {:>10}", "T", "tau", "F_self");
            for r in rows {
                println!("{:>10.4} {:>8} {:>10.4}", r.temperature, r.tau, r.f_self);
            }
        }
        Command::PhaseDiagram(args) => {
            let cfg = args.resolve()?;
            let rows = phase::phase_diagram(&cfg)?;
            println!("{:>8} {:>8} {:>8} {:>10} {:>8}  phase", "alpha", "T", "mean|q|", "max|m|", "valid");
            for r in rows {
                println!(
                    "{:>8.4} {:>8.4} {:>8.3} {:>10} {:>8}  {}",
                    r.alpha,
                    r.temperature,
                    r.mean_abs_q,
                    r.mean_max_abs_m.map_or("-".into(), |m| format!("{m:.3}")),
                    r.noise_valid,
                    r.phase.unwrap_or_else(|| "-".into())
                );
            }
        }
        Command::BenchScaling { m, nph, sizes, seed, flips, out } => {
            let report = bench_scaling(&BenchOptions { n_modes: m, n_photons: nph, sizes, seed, flips, ..Default::default() })?;
            println!("{:>6} {:>12}", "|Λ|", "ns/flip");
            for r in &report.rows {
                println!("{:>6} {:>12.2}", r.n_patterns, r.ns_per_flip);
            }
            println!("slope {:.3} ns per channel, intercept {:.2} ns, R² {:.4}", report.slope_ns, report.intercept_ns, report.r_squared);
            if let Some(dir) = out {
                write_csv(&dir.join("bench_scaling.csv"), &report.rows)?;
            }
        }
        Command::Analyze { out } => {
            let rows = analyze::analyze(&out)?;
            println!("analyzed {} temperatures in {}", rows.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

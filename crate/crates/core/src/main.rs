use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kerr_concentration::run::{
    density_rows, feasibility_record, run_pipeline, AlphaChoice, DensityGrid, Fidelity, Outcome, Squeezing, StateParams,
};
use kerr_concentration::sampling::derive_seed;
use kerr_concentration::sweep::{par_map_ordered, run_sweep, write_rows, Format, SweepConfig};
use kerr_concentration::validate::{run_validation, Status};
use kerr_concentration::{Error, Result};

/// Cross-Kerr entanglement concentration of two-mode squeezed vacuum.
#[derive(Debug, Parser)]
#[command(name = "kerrconc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One pipeline run at a given or sampled outcome.
    #[command(allow_negative_numbers = true)]
    Run {
        #[command(flatten)]
        state: StateArgs,
        /// Measured quadrature value.
        #[arg(long, conflicts_with = "sample", required_unless_present = "sample")]
        x: Option<f64>,
        /// Draw the outcome from the exact distribution.
        #[arg(long, requires = "seed")]
        sample: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// Also compute the success probability.
        #[arg(long)]
        ps: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo runs; row k uses the seed derived from `--seed` and k.
    #[command(allow_negative_numbers = true)]
    Sample {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        ps: bool,
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Outcome density on a grid: exact and closed-form columns.
    #[command(allow_negative_numbers = true)]
    Density {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, requires = "x_max")]
        x_min: Option<f64>,
        #[arg(long, requires = "x_min")]
        x_max: Option<f64>,
        #[arg(long, default_value_t = 1201)]
        points: usize,
        /// Columns to compute (default: all).
        #[arg(long, value_delimiter = ',')]
        fidelity: Vec<FidelityArg>,
        /// Add the quoted worked-example density as a labeled column.
        #[arg(long)]
        paper_quoted: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Required outcome and resources for a target variance ratio.
    #[command(allow_negative_numbers = true)]
    Feasibility {
        #[command(flatten)]
        squeezing: SqueezingArgs,
        /// Target ratio of output to input Duan sum, in (0, 1].
        #[arg(long)]
        nu: f64,
        #[arg(long, required_unless_present = "margin")]
        alpha: Option<f64>,
        /// Solve for alpha at this resource margin instead.
        #[arg(long, conflicts_with = "alpha")]
        margin: Option<f64>,
        #[arg(long)]
        phi: f64,
        #[command(flatten)]
        theta: ThetaArgs,
        /// Add the quoted worked-example outcome and density as labeled columns.
        #[arg(long)]
        paper_quoted: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sweep described by a JSON config; flags override config fields.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, conflicts_with = "lambda")]
        squeezing_db: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        phi: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        x: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        paper_quoted: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Checks the closed forms against the numerical oracles.
    Validate,
}

#[derive(Debug, Args)]
struct SqueezingArgs {
    /// Schmidt ratio tanh r, in [0, 1).
    #[arg(long, required_unless_present = "squeezing_db", conflicts_with = "squeezing_db")]
    lambda: Option<f64>,
    /// Squeezing in dB, 10 log10(e^{2r}).
    #[arg(long)]
    squeezing_db: Option<f64>,
}

impl SqueezingArgs {
    fn squeezing(&self) -> Squeezing {
        match (self.lambda, self.squeezing_db) {
            (Some(l), _) => Squeezing::Lambda(l),
            (None, Some(db)) => Squeezing::Db(db),
            (None, None) => unreachable!("clap requires one of them"),
        }
    }
}

#[derive(Debug, Args)]
struct ThetaArgs {
    /// Homodyne angle in radians [default: pi/2].
    #[arg(long, conflicts_with = "theta_deg")]
    theta: Option<f64>,
    #[arg(long)]
    theta_deg: Option<f64>,
}

impl ThetaArgs {
    fn radians(&self) -> f64 {
        match (self.theta, self.theta_deg) {
            (Some(t), _) => t,
            (None, Some(d)) => d.to_radians(),
            (None, None) => std::f64::consts::FRAC_PI_2,
        }
    }
}

#[derive(Debug, Args)]
struct StateArgs {
    #[command(flatten)]
    squeezing: SqueezingArgs,
    /// Ancilla coherent amplitude.
    #[arg(long)]
    alpha: f64,
    /// Cross-Kerr phase per photon.
    #[arg(long)]
    phi: f64,
    #[command(flatten)]
    theta: ThetaArgs,
    /// Fixed Fock truncation instead of the automatic one.
    #[arg(long)]
    n_max: Option<usize>,
}

impl StateArgs {
    fn params(&self) -> StateParams {
        StateParams {
            squeezing: self.squeezing.squeezing(),
            alpha: self.alpha,
            phi: self.phi,
            theta: self.theta.radians(),
            n_max: self.n_max,
        }
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FidelityArg {
    Exact,
    ExpBeta,
    LinearBeta,
}

fn sink(out: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: serde::Serialize>(rows: &[T], output: &OutputArgs, array: bool) -> Result<()> {
    let mut w = sink(output.out.as_ref())?;
    write_rows(rows, output.format, array, &mut w)?;
    w.flush()?;
    Ok(())
}

fn override_axis<T>(axis: &mut Option<Vec<T>>, value: Option<T>) {
    if let Some(v) = value {
        *axis = Some(vec![v]);
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run {
            state,
            x,
            sample,
            seed,
            ps,
            output,
        } => {
            let outcome = match (x, sample, seed) {
                (Some(x), false, _) => Outcome::Given(x),
                (None, true, Some(seed)) => Outcome::Sampled { seed },
                _ => return Err(Error::Config("give --x, or --sample with --seed".into())),
            };
            let record = run_pipeline(&state.params(), outcome, ps)?;
            emit(&[record], &output, false)?;
        }
        Command::Sample {
            state,
            seed,
            count,
            ps,
            jobs,
            output,
        } => {
            if count == 0 {
                return Err(Error::Config("--count must be positive".into()));
            }
            let params = state.params();
            let seeds: Vec<u64> = (0..count as u64).map(|k| derive_seed(seed, k)).collect();
            let rows = par_map_ordered(&seeds, jobs, |&s| {
                run_pipeline(&params, Outcome::Sampled { seed: s }, ps)
            })?;
            emit(&rows, &output, count > 1)?;
        }
        Command::Density {
            state,
            x_min,
            x_max,
            points,
            fidelity,
            paper_quoted,
            output,
        } => {
            let grid = x_min
                .zip(x_max)
                .map(|(x_min, x_max)| DensityGrid { x_min, x_max, points });
            let fidelity = if fidelity.is_empty() {
                Fidelity::default()
            } else {
                Fidelity {
                    exact: fidelity.contains(&FidelityArg::Exact),
                    exp_beta: fidelity.contains(&FidelityArg::ExpBeta),
                    linear_beta: fidelity.contains(&FidelityArg::LinearBeta),
                }
            };
            let rows = density_rows(&state.params(), grid, fidelity, paper_quoted)?;
            emit(&rows, &output, true)?;
        }
        Command::Feasibility {
            squeezing,
            nu,
            alpha,
            margin,
            phi,
            theta,
            paper_quoted,
            output,
        } => {
            let alpha = match (alpha, margin) {
                (Some(a), _) => AlphaChoice::Given(a),
                (None, Some(m)) => AlphaChoice::Margin(m),
                (None, None) => unreachable!("clap requires one of them"),
            };
            let record = feasibility_record(squeezing.squeezing(), nu, alpha, phi, theta.radians(), paper_quoted)?;
            emit(&[record], &output, false)?;
        }
        Command::Sweep {
            config,
            lambda,
            squeezing_db,
            alpha,
            phi,
            theta,
            nu,
            x,
            seed,
            jobs,
            paper_quoted,
            out,
            format,
        } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", config.display())))?;
            let mut cfg = SweepConfig::from_json(&text)?;
            let axes = &mut cfg.axes;
            if lambda.is_some() {
                axes.squeezing_db = None;
            }
            if squeezing_db.is_some() {
                axes.lambda = None;
            }
            if alpha.is_some() {
                axes.margin = None;
            }
            override_axis(&mut axes.lambda, lambda);
            override_axis(&mut axes.squeezing_db, squeezing_db);
            override_axis(&mut axes.alpha, alpha);
            override_axis(&mut axes.phi, phi);
            override_axis(&mut axes.theta, theta);
            override_axis(&mut axes.nu, nu);
            override_axis(&mut axes.x, x);
            override_axis(&mut axes.seed, seed);
            cfg.jobs = jobs.or(cfg.jobs);
            cfg.paper_quoted |= paper_quoted;
            cfg.output_path = out.or(cfg.output_path);
            cfg.format = format.unwrap_or(cfg.format);
            let rows = run_sweep(&cfg)?;
            let mut w = sink(cfg.output_path.as_ref())?;
            rows.write(cfg.format, &mut w)?;
            w.flush()?;
        }
        Command::Validate => {
            let report = run_validation();
            let mut failed = false;
            for check in &report {
                println!("{check}");
                failed |= check.status == Status::Fail;
            }
            if failed {
                return Ok(ExitCode::from(4));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

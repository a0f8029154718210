use clap::{Args, Parser, Subcommand};
use rkn_cli::config::{self, Experiment, RawOptions};
use rkn_cli::experiments;
use std::path::PathBuf;
use std::process::ExitCode;

/// Time-integration experiments for second-order finite element
/// systems: Runge-Kutta-Nystrom, Runge-Kutta on the first-order
/// reduction, and central differencing.
#[derive(Parser)]
#[command(name = "rkn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error vs mesh/step refinement against the model's reference solution
    Converge(RunArgs),
    /// Per-step kinetic/potential/total energy trace
    Energy(RunArgs),
    /// Mean GMRES iterations per step across meshes
    #[command(name = "solve-study")]
    SolveStudy(RunArgs),
    /// Empirical stable explicit step 2/sqrt(lambda_max) and scaling
    Stability(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// key = value config file; command-line flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model: oscillator | wave1d | wave2d | telegraph1d | beam1d
    #[arg(long)]
    model: Option<String>,
    /// Tableau: gl1 | gl2 | gl3 | radau1 | radau2 | radau3 | nystrom4
    #[arg(long)]
    tableau: Option<String>,
    /// Formulation: rkn | rk | central
    #[arg(long)]
    formulation: Option<String>,
    /// Dirichlet strategy: ode | dae | ddae (default: ode for explicit, ddae for implicit)
    #[arg(long)]
    bc: Option<String>,
    /// Comma-separated increasing mesh sizes, e.g. 16,32,64
    #[arg(long)]
    n: Option<String>,
    /// Time step rule: a value or hfactor:X for dt = X*h
    #[arg(long)]
    dt: Option<String>,
    /// Final time
    #[arg(long)]
    tfinal: Option<f64>,
    /// Linear solver: direct | gmres
    #[arg(long)]
    solver: Option<String>,
    /// Preconditioner: none | block-diagonal | block-lower | clines-ld
    #[arg(long)]
    pc: Option<String>,
    /// GMRES relative residual tolerance (default 1e-7)
    #[arg(long)]
    rtol: Option<f64>,
    /// GMRES restart length (default 50)
    #[arg(long)]
    restart: Option<usize>,
    /// Output CSV path; a sidecar <out>.meta records the configuration
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include assembly and factorization setup in timing columns
    #[arg(long)]
    include_setup_time: bool,
}

impl RunArgs {
    fn into_raw(self) -> Result<RawOptions, config::ConfigError> {
        let flags = RawOptions {
            model: self.model,
            tableau: self.tableau,
            formulation: self.formulation,
            bc: self.bc,
            n: self.n,
            dt: self.dt,
            tfinal: self.tfinal,
            solver: self.solver,
            pc: self.pc,
            rtol: self.rtol,
            restart: self.restart,
            out: self.out,
            include_setup_time: if self.include_setup_time { Some(true) } else { None },
        };
        let base = match &self.config {
            Some(path) => config::parse_config_file(path)?,
            None => RawOptions::default(),
        };
        Ok(base.overridden_by(flags))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::Converge(a) => (Experiment::Converge, a),
        Command::Energy(a) => (Experiment::Energy, a),
        Command::SolveStudy(a) => (Experiment::SolveStudy, a),
        Command::Stability(a) => (Experiment::Stability, a),
    };
    let raw = match args.into_raw() {
        Ok(raw) => raw,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let cfg = match config::resolve(experiment, raw) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    match experiments::run_experiment(&cfg) {
        Ok(outcome) => {
            if outcome.rows_failed > 0 {
                eprintln!(
                    "{} row(s) failed; see status column in {}",
                    outcome.rows_failed,
                    outcome.csv_path.display()
                );
                ExitCode::from(2)
            } else {
                println!("wrote {}", outcome.csv_path.display());
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use switchwalk::simulate::GasConfig;
use switchwalk_cli::{cmd_analyze, cmd_experiment, cmd_simulate, cmd_synthesize, Method};

#[derive(Parser)]
#[command(
    name = "switchwalk",
    about = "Stabilizing switching-signal synthesis for discrete-time switched linear systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the weighted switching digraph of an input family.
    Analyze {
        /// Input family JSON (subsystems, edges, optional certificate table).
        input: PathBuf,
        /// Where to write the digraph JSON.
        #[arg(short, long, default_value = "digraph.json")]
        output: PathBuf,
        /// Margin used when certificates are computed rather than injected.
        #[arg(long, default_value_t = 0.01)]
        margin: f64,
    },
    /// Find a contractive circuit or cycle on a digraph.
    Synthesize {
        /// Digraph JSON (or a model JSON, for --method random).
        input: PathBuf,
        #[arg(short, long, value_enum)]
        method: Method,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Model file supplying the degree profile and the Azuma-bound
        /// parameters for the random method.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(short, long, default_value = "result.json")]
        output: PathBuf,
    },
    /// Simulate the synthesized signal and validate stability.
    Simulate {
        /// Input family JSON.
        input: PathBuf,
        /// Synthesis result JSON carrying the closed walk.
        result: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Half-width of the initial-condition box.
        #[arg(long, default_value_t = 1000.0)]
        radius: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        /// Required final-to-initial norm ratio.
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
        /// Allowed transient overshoot factor.
        #[arg(long, default_value_t = 1e3)]
        bound_factor: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.01)]
        margin: f64,
        /// Where to write the per-trajectory norm series.
        #[arg(long, default_value = "norms.csv")]
        norms: PathBuf,
        /// Where to write the validation report.
        #[arg(long, default_value = "report.json")]
        report: PathBuf,
    },
    /// Monte Carlo contractivity experiment on a graph model.
    Experiment {
        /// Model JSON (sizes, degree profile, weight laws).
        model: PathBuf,
        /// Cycle lengths to test.
        #[arg(long, value_delimiter = ',', default_value = "3,5,8,13,21,34")]
        lengths: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long, default_value = "fig2.csv")]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Analyze {
            input,
            output,
            margin,
        } => cmd_analyze(&input, &output, margin).map(|_| ()),
        Command::Synthesize {
            input,
            method,
            seed,
            model,
            output,
        } => cmd_synthesize(&input, method, seed, model.as_deref(), &output).map(|_| ()),
        Command::Simulate {
            input,
            result,
            samples,
            radius,
            steps,
            threshold,
            bound_factor,
            seed,
            margin,
            norms,
            report,
        } => {
            let config = GasConfig {
                samples,
                box_radius: radius,
                steps,
                decay_threshold: threshold,
                boundedness_factor: bound_factor,
                seed,
            };
            cmd_simulate(&input, &result, &config, margin, &norms, &report).map(|_| ())
        }
        Command::Experiment {
            model,
            lengths,
            trials,
            seed,
            output,
        } => cmd_experiment(&model, &lengths, trials, seed, &output).map(|_| ()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

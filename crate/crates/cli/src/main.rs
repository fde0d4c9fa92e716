use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rmf_core::harness::{replica_csv, run_comparison, run_replica_convergence, run_scenario, ScenarioFile};
use rmf_core::model::{gen_feedforward, gen_random_recurrent};
use rmf_core::rmf::{solve_rmf, SolverConfig};
use rmf_core::simulator::{simulate_lgl, simulate_replica, SimConfig};
use rmf_core::tmf::solve_tmf;
use rmf_core::transfer::{saturation_bound, sqrt_asymptote, transfer_eval, TransferQuery};
use rmf_core::NetworkSpec;

#[derive(Parser)]
#[command(name = "lgl", version, about = "Simulate LGL spiking networks and solve their mean-field rate equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Output {
    /// Write here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct SpecArg {
    /// Network document (JSON)
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Spikes to generate, burn-in included
    #[arg(long, default_value_t = 10_000_000)]
    events: u64,
    #[arg(long, default_value_t = 0.1)]
    burn_in: f64,
}

impl SimArgs {
    fn config(&self) -> SimConfig {
        SimConfig {
            max_events: self.events,
            burn_in_fraction: self.burn_in,
            seed: self.seed,
            record_spikes: false,
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 20)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    fp_tol: f64,
    #[arg(long, default_value_t = 1.0)]
    damping: f64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            max_iter: self.max_iter,
            fp_tol: self.fp_tol,
            damping: self.damping,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Topology {
    Recurrent,
    Feedforward,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sweep {
    /// Vary the input rates at fixed weight
    Rate,
    /// Vary the weights at fixed input rate
    Weight,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a benchmark network document
    Generate {
        #[arg(long, value_enum, conflicts_with = "scenario")]
        topology: Option<Topology>,
        /// Use the network of a bundled scenario
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long, default_value_t = 100)]
        k: usize,
        #[arg(long, default_value_t = 10)]
        layers: usize,
        #[arg(long, default_value_t = 40)]
        width: usize,
        #[arg(long, default_value_t = 5)]
        in_degree: usize,
        #[arg(long, default_value_t = 1.0)]
        weight_max: f64,
        #[arg(long, default_value_t = 1.0)]
        base: f64,
        /// Relaxation time; `inf` for counting synapses
        #[arg(long, default_value = "inf")]
        tau: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a network (or its replica version with --replicas)
    Simulate {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        replicas: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Solve the replica-mean-field rate equations
    SolveRmf {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Solve the thermodynamic-mean-field rate equations
    SolveTmf {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Compare simulated rates with both solvers
    Compare {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Run a bundled benchmark scenario
    Scenario {
        /// dense-recurrent, sparse-recurrent, dense-feedforward or sparse-feedforward
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the configured event count
        #[arg(long)]
        events: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Replica simulations at several M against the RMF rates
    Replica {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, value_delimiter = ',', default_value = "2,10,100")]
        m: Vec<usize>,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Sweep the single-neuron transfer function
    Transfer {
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        /// Number of identical input streams
        #[arg(long, default_value_t = 2)]
        inputs: usize,
        #[arg(long, value_enum, default_value_t = Sweep::Rate)]
        sweep: Sweep,
        /// Weight for rate sweeps, rate for weight sweeps
        #[arg(long, default_value_t = 1.0)]
        fixed: f64,
        #[arg(long, default_value_t = 0.01)]
        from: f64,
        #[arg(long, default_value_t = 1e4)]
        to: f64,
        /// Log-spaced sweep points
        #[arg(long, default_value_t = 25)]
        points: usize,
        #[command(flatten)]
        output: Output,
    },
}

fn load_spec(arg: &SpecArg) -> Result<NetworkSpec> {
    let text = fs::read_to_string(&arg.spec).with_context(|| format!("reading {}", arg.spec.display()))?;
    NetworkSpec::load(&text).with_context(|| format!("loading {}", arg.spec.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render<T: serde::Serialize>(output: &Output, value: &T, csv: impl FnOnce() -> String) -> Result<()> {
    let text = match output.format {
        Format::Csv => csv(),
        Format::Json => serde_json::to_string_pretty(value)? + "\n",
    };
    emit(output.out.as_deref(), &text)
}

/// `cmp.csv` → `cmp.summary.csv`
fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.csv")
}

fn log_sweep(from: f64, to: f64, points: usize) -> Result<Vec<f64>> {
    if !(from > 0.0 && to >= from) || points == 0 {
        bail!("sweep needs 0 < from <= to and at least one point");
    }
    if points == 1 {
        return Ok(vec![from]);
    }
    let step = (to / from).ln() / (points - 1) as f64;
    Ok((0..points).map(|k| from * (step * k as f64).exp()).collect())
}

fn transfer_rows(q0: &TransferQuery, sweep: Sweep, values: &[f64], cfg: &SolverConfig) -> Result<String> {
    let mut csv = String::from("sweep_value,F,sqrt_asymptote,beta_bar,corrected\n");
    for &v in values {
        let mut q = q0.clone();
        for inp in &mut q.inputs {
            match sweep {
                Sweep::Rate => inp.0 = v,
                Sweep::Weight => inp.1 = v,
            }
        }
        let f = transfer_eval(&q, cfg)?;
        let asym = sqrt_asymptote(&q).map_or(String::new(), |a| a.to_string());
        let (bar, corr) = match saturation_bound(&q) {
            Ok((bar, corr)) => (bar.to_string(), corr.map_or(String::new(), |c| c.to_string())),
            Err(_) => (String::new(), String::new()),
        };
        csv.push_str(&format!("{v},{f},{asym},{bar},{corr}\n"));
    }
    Ok(csv)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            topology,
            scenario,
            k,
            layers,
            width,
            in_degree,
            weight_max,
            base,
            tau,
            seed,
            out,
        } => {
            let spec = match (scenario, topology) {
                (Some(name), _) => ScenarioFile::builtin().build(&name, seed)?,
                (None, Some(Topology::Feedforward)) => {
                    gen_feedforward(layers, width, in_degree, weight_max, base, tau, seed)?
                }
                (None, _) => gen_random_recurrent(k, in_degree, weight_max, base, tau, seed)?,
            };
            emit(out.as_deref(), &spec.save())
        }
        Command::Simulate {
            spec,
            sim,
            replicas,
            output,
        } => {
            let spec = load_spec(&spec)?;
            let res = match replicas {
                Some(m) => simulate_replica(&spec, m, &sim.config())?,
                None => simulate_lgl(&spec, &sim.config())?,
            };
            render(&output, &res, || res.to_csv())
        }
        Command::SolveRmf { spec, solver, output } => {
            let spec = load_spec(&spec)?;
            let rep = solve_rmf(&spec, &solver.config(), None)?;
            if !rep.converged {
                eprintln!("warning: not converged after {} iterations", rep.iterations);
            }
            render(&output, &rep, || rep.to_csv())
        }
        Command::SolveTmf { spec, solver, output } => {
            let spec = load_spec(&spec)?;
            let rep = solve_tmf(&spec, &solver.config(), None)?;
            if !rep.converged {
                eprintln!("warning: not converged after {} iterations", rep.iterations);
            }
            render(&output, &rep, || rep.to_csv())
        }
        Command::Compare {
            spec,
            sim,
            solver,
            output,
        } => {
            let spec = load_spec(&spec)?;
            let rep = run_comparison(&spec, &sim.config(), &solver.config())?;
            write_comparison(&output, &rep)
        }
        Command::Scenario {
            name,
            seed,
            events,
            output,
        } => {
            let rep = run_scenario(&name, seed, events)?;
            write_comparison(&output, &rep)
        }
        Command::Replica {
            spec,
            m,
            sim,
            solver,
            output,
        } => {
            let spec = load_spec(&spec)?;
            let rows = run_replica_convergence(&spec, &m, &sim.config(), &solver.config())?;
            render(&output, &rows, || replica_csv(&rows))
        }
        Command::Transfer {
            tau,
            b,
            r,
            inputs,
            sweep,
            fixed,
            from,
            to,
            points,
            output,
        } => {
            if output.format == Format::Json {
                bail!("transfer sweeps are emitted as CSV only");
            }
            let pair = match sweep {
                Sweep::Rate => (from, fixed),
                Sweep::Weight => (fixed, from),
            };
            let q = TransferQuery::new(tau, b, r, vec![pair; inputs])?;
            let csv = transfer_rows(&q, sweep, &log_sweep(from, to, points)?, &SolverConfig::default())?;
            emit(output.out.as_deref(), &csv)
        }
    }
}

fn write_comparison(output: &Output, rep: &rmf_core::harness::ComparisonReport) -> Result<()> {
    render(output, rep, || rep.to_csv())?;
    if output.format == Format::Csv {
        match &output.out {
            Some(path) => emit(Some(&summary_path(path)), &rep.summary_csv())?,
            None => eprint!("{}", rep.summary_csv()),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

//! Simulation-versus-solver comparisons and the benchmark scenarios.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{gen_feedforward, gen_random_recurrent, NetworkSpec};
use crate::rmf::{solve_rmf, SolverConfig};
use crate::simulator::{simulate_lgl, simulate_replica, SimConfig};
use crate::tmf::solve_tmf;

const SCENARIOS_TOML: &str = include_str!("../scenarios.toml");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub neuron: usize,
    pub rate_sim: f64,
    pub rate_rmf: f64,
    pub rate_tmf: f64,
    pub err_rmf: f64,
    pub err_tmf: f64,
    /// Neuron without presynaptic partners; excluded from the aggregates.
    pub driving: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub mean_err_rmf: f64,
    pub max_err_rmf: f64,
    pub mean_err_tmf: f64,
    pub max_err_tmf: f64,
    pub spec_digest: String,
    pub sim: SimConfig,
    pub solver: SolverConfig,
    pub rmf_converged: bool,
    pub rmf_iterations: usize,
    pub tmf_converged: bool,
    pub tmf_iterations: usize,
    /// Largest batch-means standard error of a simulated rate, relative to the rate.
    pub max_rel_stderr: f64,
}

impl ComparisonReport {
    /// `neuron,rate_sim,rate_rmf,rate_tmf,err_rmf,err_tmf`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("neuron,rate_sim,rate_rmf,rate_tmf,err_rmf,err_tmf\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.neuron, r.rate_sim, r.rate_rmf, r.rate_tmf, r.err_rmf, r.err_tmf
            );
        }
        out
    }

    /// `method,mean_rel_err,max_rel_err`
    pub fn summary_csv(&self) -> String {
        format!(
            "method,mean_rel_err,max_rel_err\nrmf,{},{}\ntmf,{},{}\n",
            self.mean_err_rmf, self.max_err_rmf, self.mean_err_tmf, self.max_err_tmf
        )
    }
}

/// Mean and max over the rows that count; all rows if every neuron is driving.
fn aggregate(rows: &[ComparisonRow], pick: impl Fn(&ComparisonRow) -> f64) -> (f64, f64) {
    let any_driven = rows.iter().any(|r| !r.driving);
    let vals: Vec<f64> = rows.iter().filter(|r| !any_driven || !r.driving).map(pick).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    (mean, vals.iter().cloned().fold(0.0, f64::max))
}

/// Simulates `spec` and solves both mean-field systems on it.
pub fn run_comparison(spec: &NetworkSpec, sim_cfg: &SimConfig, solver_cfg: &SolverConfig) -> Result<ComparisonReport> {
    spec.ensure_valid()?;
    let sim = simulate_lgl(spec, sim_cfg)?;
    let rmf = solve_rmf(spec, solver_cfg, None)?;
    let tmf = solve_tmf(spec, solver_cfg, None)?;
    let driving = spec.driving_neurons();
    let rows: Vec<ComparisonRow> = (0..spec.len())
        .map(|i| {
            let s = sim.rates[i];
            ComparisonRow {
                neuron: i,
                rate_sim: s,
                rate_rmf: rmf.beta[i],
                rate_tmf: tmf.beta[i],
                err_rmf: (rmf.beta[i] - s).abs() / s,
                err_tmf: (tmf.beta[i] - s).abs() / s,
                driving: driving[i],
            }
        })
        .collect();
    let (mean_err_rmf, max_err_rmf) = aggregate(&rows, |r| r.err_rmf);
    let (mean_err_tmf, max_err_tmf) = aggregate(&rows, |r| r.err_tmf);
    let max_rel_stderr = sim
        .rate_stderr
        .iter()
        .zip(&sim.rates)
        .map(|(se, r)| se / r)
        .fold(0.0, f64::max);
    Ok(ComparisonReport {
        rows,
        mean_err_rmf,
        max_err_rmf,
        mean_err_tmf,
        max_err_tmf,
        spec_digest: spec.digest(),
        sim: *sim_cfg,
        solver: *solver_cfg,
        rmf_converged: rmf.converged,
        rmf_iterations: rmf.iterations,
        tmf_converged: tmf.converged,
        tmf_iterations: tmf.iterations,
        max_rel_stderr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Recurrent,
    Feedforward,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct Scenario {
    pub name: String,
    pub topology: Topology,
    #[serde(default)]
    pub k: usize,
    #[serde(default)]
    pub layers: usize,
    #[serde(default)]
    pub width: usize,
    pub in_degree: usize,
    pub weight_max: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct ScenarioDefaults {
    pub base: f64,
    pub events: u64,
    pub burn_in_fraction: f64,
    pub max_iter: usize,
    pub fp_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct ScenarioFile {
    pub version: u32,
    pub defaults: ScenarioDefaults,
    #[serde(rename = "scenario")]
    pub scenarios: Vec<Scenario>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// The scenario set shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(SCENARIOS_TOML).expect("bundled scenario file is valid")
    }

    pub fn get(&self, name: &str) -> Result<&Scenario> {
        self.scenarios
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::UnknownScenario(name.to_string()))
    }

    /// Network of a scenario with counting synapses and `b = r = base`.
    pub fn build(&self, name: &str, seed: u64) -> Result<NetworkSpec> {
        let s = self.get(name)?;
        let base = self.defaults.base;
        match s.topology {
            Topology::Recurrent => gen_random_recurrent(s.k, s.in_degree, s.weight_max, base, f64::INFINITY, seed),
            Topology::Feedforward => {
                gen_feedforward(s.layers, s.width, s.in_degree, s.weight_max, base, f64::INFINITY, seed)
            }
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            max_iter: self.defaults.max_iter,
            fp_tol: self.defaults.fp_tol,
            ..Default::default()
        }
    }

    pub fn sim_config(&self, seed: u64, events: Option<u64>) -> SimConfig {
        SimConfig {
            max_events: events.unwrap_or(self.defaults.events),
            burn_in_fraction: self.defaults.burn_in_fraction,
            seed,
            record_spikes: false,
        }
    }
}

/// Runs a bundled scenario. `seed` drives both the network draw and the
/// simulation; `events` overrides the configured event count.
pub fn run_scenario(name: &str, seed: u64, events: Option<u64>) -> Result<ComparisonReport> {
    let file = ScenarioFile::builtin();
    let spec = file.build(name, seed)?;
    run_comparison(&spec, &file.sim_config(seed, events), &file.solver_config())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaRow {
    pub m: usize,
    pub class_rates: Vec<f64>,
    /// `|rate - β_RMF| / β_RMF` per class
    pub gaps: Vec<f64>,
    pub sup_gap: f64,
}

/// Replica simulations at each `M`, compared with the RMF rates.
pub fn run_replica_convergence(
    spec: &NetworkSpec,
    m_list: &[usize],
    sim_cfg: &SimConfig,
    solver_cfg: &SolverConfig,
) -> Result<Vec<ReplicaRow>> {
    if let Some(&m) = m_list.iter().find(|&&m| m < 2) {
        return Err(Error::InvalidArgument(format!("replica count must be at least 2, got {m}")));
    }
    let rmf = solve_rmf(spec, solver_cfg, None)?;
    m_list
        .iter()
        .map(|&m| {
            let res = simulate_replica(spec, m, sim_cfg)?;
            let gaps: Vec<f64> = res
                .rates
                .iter()
                .zip(rmf.beta.iter())
                .map(|(s, b)| (s - b).abs() / b)
                .collect();
            let sup_gap = gaps.iter().cloned().fold(0.0, f64::max);
            Ok(ReplicaRow {
                m,
                class_rates: res.rates,
                gaps,
                sup_gap,
            })
        })
        .collect()
}

/// `M,class,rate,gap`
pub fn replica_csv(rows: &[ReplicaRow]) -> String {
    let mut out = String::from("M,class,rate,gap\n");
    for row in rows {
        for (i, (rate, gap)) in row.class_rates.iter().zip(&row.gaps).enumerate() {
            let _ = writeln!(out, "{},{i},{rate},{gap}", row.m);
        }
    }
    out
}

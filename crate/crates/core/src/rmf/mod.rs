//! Replica-mean-field (RMF) self-consistency.
//!
//! Each neuron is treated as an isolated renewal process driven by independent
//! Poisson inputs at the rates of its presynaptic partners; its output rate is
//! the inverse mean inter-spike interval. Iterating this map gives the RMF
//! stationary rates. The homogeneous counting model has a closed form, see
//! [`counting`].

pub mod counting;

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{NetworkSpec, RateVector};
use crate::renewal::{RenewalKernel, Tolerances};

pub use counting::{
    counting_distribution, counting_distribution_to_tail, counting_pgf, counting_rate, CountingDistribution,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub quad_rel_tol: f64,
    pub quad_abs_tol: f64,
    /// Relative truncation error allowed for the improper integral.
    pub tail_tol: f64,
    /// Stop when the relative sup-norm change of one step drops below this.
    pub fp_tol: f64,
    pub max_iter: usize,
    /// `β ← (1 - damping) β + damping F(β)`
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            quad_rel_tol: 1e-10,
            quad_abs_tol: 1e-12,
            tail_tol: 1e-14,
            fp_tol: 1e-10,
            max_iter: 20,
            damping: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let tols = [self.quad_rel_tol, self.quad_abs_tol, self.tail_tol, self.fp_tol];
        if tols.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::InvalidArgument("solver tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        Ok(())
    }

    pub(crate) fn tolerances(&self) -> Tolerances {
        Tolerances {
            rel: self.quad_rel_tol,
            abs: self.quad_abs_tol,
            tail: self.tail_tol,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub beta: RateVector,
    pub iterations: usize,
    /// Relative sup-norm change of the last step.
    pub final_residual: f64,
    pub converged: bool,
    /// Relative RMF-ansatz ODE residual per neuron, when requested.
    pub residual_ode: Option<Vec<f64>>,
}

impl SolveReport {
    /// `neuron,beta,iterations,converged,residual`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("neuron,beta,iterations,converged,residual\n");
        for (i, b) in self.beta.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i},{b},{},{},{}",
                self.iterations, self.converged, self.final_residual
            );
        }
        out
    }
}

pub(crate) fn check_rates(spec: &NetworkSpec, beta: &[f64]) -> Result<()> {
    if beta.len() != spec.len() {
        return Err(Error::InvalidArgument(format!(
            "rate vector has length {}, network has {} neurons",
            beta.len(),
            spec.len()
        )));
    }
    RateVector::new(beta.to_vec()).map(|_| ())
}

pub(crate) fn kernel_for(spec: &NetworkSpec, incoming: &[(usize, f64)], i: usize, beta: &[f64]) -> RenewalKernel {
    RenewalKernel::new(
        spec.tau[i],
        spec.b[i],
        spec.r[i],
        incoming.iter().map(|&(j, mu)| (beta[j], mu)),
    )
}

/// Component `i` of the RMF map: the output rate of neuron `i` given Poisson
/// inputs at rates `beta`.
pub fn rmf_rhs_component(spec: &NetworkSpec, beta: &[f64], i: usize, cfg: &SolverConfig) -> Result<f64> {
    let incoming: Vec<(usize, f64)> = spec
        .synapses
        .iter()
        .filter(|s| s.post == i)
        .map(|s| (s.pre, s.weight))
        .collect();
    let kernel = kernel_for(spec, &incoming, i, beta);
    Ok(1.0 / kernel.mean_interval(&cfg.tolerances())?)
}

/// The full RMF map `F(β)`.
pub fn rmf_rhs(spec: &NetworkSpec, beta: &[f64], cfg: &SolverConfig) -> Result<RateVector> {
    spec.ensure_valid()?;
    check_rates(spec, beta)?;
    let tol = cfg.tolerances();
    let out = spec
        .incoming()
        .iter()
        .enumerate()
        .map(|(i, inc)| Ok(1.0 / kernel_for(spec, inc, i, beta).mean_interval(&tol)?))
        .collect::<Result<Vec<_>>>()?;
    RateVector::new(out)
}

/// Integrand of the self-consistency integral at `v ≤ 0`,
/// `exp(-h_i(v) - Σ_j β_j h_ij(v) + l_i(v))`: the probability that an
/// interval of neuron `i` exceeds `-v`.
pub fn rmf_survival(spec: &NetworkSpec, beta: &[f64], i: usize, v: f64) -> Result<f64> {
    spec.ensure_valid()?;
    check_rates(spec, beta)?;
    if i >= spec.len() {
        return Err(Error::InvalidArgument(format!("neuron index {i} out of range")));
    }
    if !(v <= 0.0) {
        return Err(Error::Domain {
            function: "rmf_survival",
            detail: format!("v = {v}; need v <= 0"),
        });
    }
    let inc = &spec.incoming()[i];
    Ok((-kernel_for(spec, inc, i, beta).phi(-v)).exp())
}

/// Damped fixed-point iteration shared by the RMF and TMF solvers.
pub(crate) fn iterate_fixed_point(
    spec: &NetworkSpec,
    cfg: &SolverConfig,
    beta0: Option<&[f64]>,
    rhs: impl Fn(&[f64]) -> Result<RateVector>,
) -> Result<SolveReport> {
    spec.ensure_valid()?;
    cfg.validate()?;
    let mut beta = match beta0 {
        Some(b0) => {
            check_rates(spec, b0)?;
            b0.to_vec()
        }
        None => spec.b.clone(),
    };
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let image = rhs(&beta)?;
        let next: Vec<f64> = beta
            .iter()
            .zip(image.iter())
            .map(|(&old, &new)| (1.0 - cfg.damping) * old + cfg.damping * new)
            .collect();
        change = beta
            .iter()
            .zip(&next)
            .map(|(&old, &new)| ((new - old) / old).abs())
            .fold(0.0, f64::max);
        beta = next;
        iterations += 1;
        if change < cfg.fp_tol {
            break;
        }
    }
    Ok(SolveReport {
        beta: RateVector::new(beta)?,
        iterations,
        final_residual: change,
        converged: change < cfg.fp_tol,
        residual_ode: None,
    })
}

/// Solves `β = F(β)` by (optionally damped) fixed-point iteration from
/// `beta0`, defaulting to the base rates. Non-convergence is reported, not an error.
pub fn solve_rmf(spec: &NetworkSpec, cfg: &SolverConfig, beta0: Option<&[f64]>) -> Result<SolveReport> {
    iterate_fixed_point(spec, cfg, beta0, |beta| rmf_rhs(spec, beta, cfg))
}

/// Moment-generating function `L_i(u) = E[e^{u λ_i}]` of the stationary
/// intensity of neuron `i` under the RMF ansatz, for `-τ_i < u ≤ 0`.
///
/// The closed-form integral is naturally written in `x = τ ln(1 + u/τ)`
/// (`x = u` for counting synapses), where the ansatz ODE has no singular
/// point: `L = β e^{l(x)} ∫_{-x}^∞ e^{Φ(-x) - Φ(t)} dt`.
pub fn rmf_mgf(spec: &NetworkSpec, beta: &[f64], i: usize, u: f64, cfg: &SolverConfig) -> Result<f64> {
    spec.ensure_valid()?;
    check_rates(spec, beta)?;
    if i >= spec.len() {
        return Err(Error::InvalidArgument(format!("neuron index {i} out of range")));
    }
    let f_i = rmf_rhs_component(spec, beta, i, cfg)?;
    let residual = ((f_i - beta[i]) / beta[i]).abs();
    if residual > 10.0 * cfg.fp_tol.max(cfg.quad_rel_tol) {
        return Err(Error::NotAtFixedPoint { neuron: i, residual });
    }
    mgf_unchecked(spec, beta, i, u, cfg)
}

fn mgf_unchecked(spec: &NetworkSpec, beta: &[f64], i: usize, u: f64, cfg: &SolverConfig) -> Result<f64> {
    let tau = spec.tau[i];
    if !(u <= 0.0) {
        return Err(Error::Domain {
            function: "rmf_mgf",
            detail: format!("u = {u}; the integral representation needs u <= 0"),
        });
    }
    if tau.is_finite() && u <= -tau {
        return Err(Error::Domain {
            function: "rmf_mgf",
            detail: format!("u = {u}; need u > -tau = {}", -tau),
        });
    }
    let x = if tau.is_finite() { tau * (u / tau).ln_1p() } else { u };
    let l = if tau.is_finite() {
        tau * spec.r[i] * (x / tau).exp_m1()
    } else {
        spec.r[i] * x
    };
    let inc: Vec<(usize, f64)> = spec
        .synapses
        .iter()
        .filter(|s| s.post == i)
        .map(|s| (s.pre, s.weight))
        .collect();
    let kernel = kernel_for(spec, &inc, i, beta);
    let integral = kernel.tail_integral(-x, &cfg.tolerances())?;
    Ok(beta[i] * l.exp() * integral)
}

/// Relative residual of the RMF-ansatz ODE at `u`:
/// `-(1 + u/τ) L' + (u b/τ + Σ_j (e^{uμ_ij} - 1) β_j) L + β_i e^{u r_i}`,
/// divided by the largest of the three terms. `L'` is a five-point central
/// difference of [`rmf_mgf`].
pub fn ansatz_residual(spec: &NetworkSpec, beta: &[f64], i: usize, u: f64, cfg: &SolverConfig) -> Result<f64> {
    // validates the fixed point once
    let l0 = rmf_mgf(spec, beta, i, u, cfg)?;
    let tau = spec.tau[i];
    let mut h = 1e-2f64.min(0.25 * u.abs());
    if tau.is_finite() {
        h = h.min(0.25 * (u + tau));
    }
    if !(h > 0.0) {
        return Err(Error::Domain {
            function: "ansatz_residual",
            detail: format!("u = {u}; need -tau < u < 0"),
        });
    }
    let at = |v: f64| mgf_unchecked(spec, beta, i, v, cfg);
    let deriv = (at(u - 2.0 * h)? - 8.0 * at(u - h)? + 8.0 * at(u + h)? - at(u + 2.0 * h)?) / (12.0 * h);
    let drift = if tau.is_finite() { 1.0 + u / tau } else { 1.0 };
    let own = if tau.is_finite() { u * spec.b[i] / tau } else { 0.0 };
    let coupling: f64 = spec
        .synapses
        .iter()
        .filter(|s| s.post == i)
        .map(|s| (u * s.weight).exp_m1() * beta[s.pre])
        .sum();
    let t1 = -drift * deriv;
    let t2 = (own + coupling) * l0;
    let t3 = beta[i] * (u * spec.r[i]).exp();
    let scale = t1.abs().max(t2.abs()).max(t3.abs());
    Ok((t1 + t2 + t3).abs() / scale)
}

/// Fills `report.residual_ode` with the worst ansatz residual over `us` per neuron.
pub fn attach_ode_residuals(spec: &NetworkSpec, report: &mut SolveReport, us: &[f64], cfg: &SolverConfig) -> Result<()> {
    let mut res = Vec::with_capacity(spec.len());
    for i in 0..spec.len() {
        let mut worst: f64 = 0.0;
        for &u in us {
            worst = worst.max(ansatz_residual(spec, &report.beta, i, u, cfg)?);
        }
        res.push(worst);
    }
    report.residual_ode = Some(res);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_random_recurrent, Synapse};

    fn tight() -> SolverConfig {
        SolverConfig {
            quad_rel_tol: 1e-13,
            quad_abs_tol: 1e-15,
            tail_tol: 1e-15,
            fp_tol: 1e-12,
            max_iter: 300,
            damping: 1.0,
        }
    }

    #[test]
    fn isolated_constant_intensity() {
        let spec = NetworkSpec::uniform(1, 1.3, 2.0, 2.0);
        let f = rmf_rhs(&spec, &[5.0], &SolverConfig::default()).unwrap();
        assert!((f[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn counting_fixed_point_of_rhs() {
        let (k, mu) = (10, 0.5);
        let beta = counting_rate(k, 1.0, mu).unwrap();
        let spec = NetworkSpec::counting(k, 1.0, mu);
        let f = rmf_rhs(&spec, &vec![beta; k], &tight()).unwrap();
        for v in f.iter() {
            assert!(((v - beta) / beta).abs() < 1e-8);
        }
    }

    #[test]
    fn uncoupled_converges_immediately() {
        let mut spec = NetworkSpec::uniform(3, 2.0, 1.5, 1.5);
        spec.synapses.push(Synapse {
            post: 0,
            pre: 1,
            weight: 0.0,
        });
        let rep = solve_rmf(&spec, &SolverConfig::default(), None).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
        assert!(rep.beta.iter().all(|&b| (b - 1.5).abs() < 1e-10));
    }

    #[test]
    fn solve_matches_closed_form() {
        let spec = NetworkSpec::counting(10, 1.0, 0.5);
        let rep = solve_rmf(&spec, &tight(), None).unwrap();
        assert!(rep.converged);
        let beta = counting_rate(10, 1.0, 0.5).unwrap();
        for v in rep.beta.iter() {
            assert!(((v - beta) / beta).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = NetworkSpec::counting(3, 1.0, 0.5);
        assert!(rmf_rhs(&spec, &[1.0, 0.0, 1.0], &SolverConfig::default()).is_err());
        assert!(rmf_rhs(&spec, &[1.0, 1.0], &SolverConfig::default()).is_err());
        let bad = SolverConfig {
            damping: 0.0,
            ..Default::default()
        };
        assert!(solve_rmf(&spec, &bad, None).is_err());
    }

    #[test]
    fn mgf_normalization_and_slope() {
        let spec = gen_random_recurrent(6, 3, 1.0, 1.0, 1.0, 11).unwrap();
        let rep = solve_rmf(&spec, &tight(), None).unwrap();
        assert!(rep.converged);
        let cfg = tight();
        for i in 0..spec.len() {
            let l0 = rmf_mgf(&spec, &rep.beta, i, 0.0, &cfg).unwrap();
            assert!((l0 - 1.0).abs() < 1e-8);
            let h = 1e-4;
            let slope = (3.0 * l0 - 4.0 * rmf_mgf(&spec, &rep.beta, i, -h, &cfg).unwrap()
                + rmf_mgf(&spec, &rep.beta, i, -2.0 * h, &cfg).unwrap())
                / (2.0 * h);
            assert!((slope - rep.beta[i]).abs() < 1e-6 * rep.beta[i], "{slope} vs {}", rep.beta[i]);
        }
    }

    #[test]
    fn mgf_of_constant_intensity() {
        let spec = NetworkSpec::uniform(1, 1.0, 2.0, 2.0);
        for &u in &[-0.9, -0.5, -0.1] {
            let l = rmf_mgf(&spec, &[2.0], 0, u, &tight()).unwrap();
            assert!((l - (2.0 * u).exp()).abs() < 1e-11, "u={u}");
        }
        let c = NetworkSpec::uniform(1, f64::INFINITY, 2.0, 2.0);
        let l = rmf_mgf(&c, &[2.0], 0, -3.0, &tight()).unwrap();
        assert!((l - (-6.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn mgf_domain_and_fixed_point_checks() {
        let spec = NetworkSpec::uniform(1, 1.0, 2.0, 2.0);
        let cfg = tight();
        assert!(matches!(rmf_mgf(&spec, &[2.0], 0, 0.1, &cfg), Err(Error::Domain { .. })));
        assert!(matches!(rmf_mgf(&spec, &[2.0], 0, -1.0, &cfg), Err(Error::Domain { .. })));
        let coupled = NetworkSpec::counting(3, 1.0, 1.0);
        assert!(matches!(
            rmf_mgf(&coupled, &[1.0, 1.0, 1.0], 0, -0.1, &cfg),
            Err(Error::NotAtFixedPoint { .. })
        ));
    }

    #[test]
    fn mgf_increasing_and_positive() {
        let spec = gen_random_recurrent(5, 2, 2.0, 1.0, 0.7, 3).unwrap();
        let rep = solve_rmf(&spec, &tight(), None).unwrap();
        let mut prev = 0.0;
        for n in 0..=12 {
            let u = -0.65 + 0.05 * n as f64;
            let l = rmf_mgf(&spec, &rep.beta, 2, u.min(0.0), &tight()).unwrap();
            assert!(l > prev);
            prev = l;
        }
    }

    #[test]
    fn counting_ansatz_residual() {
        let spec = NetworkSpec::counting(4, 1.0, 0.8);
        let mut rep = solve_rmf(&spec, &tight(), None).unwrap();
        attach_ode_residuals(&spec, &mut rep, &[-0.5, -0.1, -0.01], &tight()).unwrap();
        for r in rep.residual_ode.unwrap() {
            assert!(r < 1e-6, "residual {r}");
        }
    }

    #[test]
    fn rhs_monotone_in_inputs() {
        let spec = gen_random_recurrent(5, 3, 1.5, 1.0, 1.0, 9).unwrap();
        let cfg = tight();
        let beta = vec![1.3, 0.8, 2.0, 1.1, 1.7];
        let base = rmf_rhs(&spec, &beta, &cfg).unwrap();
        for j in 0..5 {
            let mut bumped = beta.clone();
            bumped[j] *= 1.01;
            let f = rmf_rhs(&spec, &bumped, &cfg).unwrap();
            for i in 0..5 {
                assert!(f[i] >= base[i] - 1e-12, "dF_{i}/dbeta_{j} < 0");
            }
        }
    }

    #[test]
    fn csv_shape() {
        let spec = NetworkSpec::counting(2, 1.0, 0.5);
        let rep = solve_rmf(&spec, &SolverConfig::default(), None).unwrap();
        let csv = rep.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "neuron,beta,iterations,converged,residual");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,"));
    }
}

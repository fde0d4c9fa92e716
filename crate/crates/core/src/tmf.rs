//! Thermodynamic-mean-field (TMF) baseline.
//!
//! Inputs become a deterministic drive: between its own spikes neuron `i`
//! relaxes toward `s_i = b_i + τ_i Σ_j μ_ij β_j` from the reset value `r_i`.
//! For counting synapses (`τ = ∞`) the intensity grows linearly,
//! `r_i + α_i t` with `α_i = Σ_j μ_ij β_j`, which gives a Gaussian survival;
//! this branch is an extension with no finite-`τ` counterpart.

use crate::error::{Error, Result};
use crate::model::{NetworkSpec, RateVector};
use crate::rmf::{check_rates, iterate_fixed_point, SolveReport, SolverConfig};
use crate::specfun::{ln_scaled_lower_gamma, ln_upper_cf, log_upper_gamma};

/// Relative gap `(s - r)/s` below which the drive is treated as degenerate.
const DEGENERATE_GAP: f64 = 1e-8;

/// Fixed-point residual tolerated by the density and MGF evaluators.
const FIXED_POINT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TmfState {
    /// Effective drive per neuron; infinite for counting synapses with input.
    pub s: Vec<f64>,
    pub beta: RateVector,
}

impl TmfState {
    pub fn new(spec: &NetworkSpec, beta: &[f64]) -> Result<Self> {
        spec.ensure_valid()?;
        check_rates(spec, beta)?;
        let alpha = drive(spec, beta);
        let s = (0..spec.len())
            .map(|i| {
                if spec.tau[i].is_finite() {
                    spec.b[i] + spec.tau[i] * alpha[i]
                } else if alpha[i] > 0.0 {
                    f64::INFINITY
                } else {
                    spec.b[i]
                }
            })
            .collect();
        Ok(Self {
            s,
            beta: RateVector::new(beta.to_vec())?,
        })
    }
}

/// `α_i = Σ_j μ_ij β_j`
fn drive(spec: &NetworkSpec, beta: &[f64]) -> Vec<f64> {
    let mut alpha = vec![0.0; spec.len()];
    for syn in &spec.synapses {
        alpha[syn.post] += syn.weight * beta[syn.pre];
    }
    alpha
}

/// Mean inter-spike interval under a constant drive toward `s` from `r`.
fn relaxing_interval(tau: f64, r: f64, s: f64) -> Result<f64> {
    let gap = s - r;
    if gap < DEGENERATE_GAP * s {
        // e^x γ(a,x)/x^a = (1/a)(1 + x/(a+1) + O(x²))
        let a = tau * s;
        return Ok((1.0 + tau * gap / (a + 1.0)) / s);
    }
    let a = tau * s;
    let x = gap * tau;
    Ok((tau.ln() + ln_scaled_lower_gamma(a, x)?).exp())
}

/// `∫_0^∞ exp(-r t - α t²/2) dt`
fn counting_interval(r: f64, alpha: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(1.0 / r);
    }
    let x = r * r / (2.0 * alpha);
    if x >= 1.5 {
        // e^x Γ(1/2, x) = √x · h(1/2, x)
        Ok(r * ln_upper_cf(0.5, x).exp() / (2.0 * alpha))
    } else {
        Ok((x + log_upper_gamma(0.5, x)?.ln()).exp() / (2.0 * alpha).sqrt())
    }
}

/// The TMF map: per-neuron inverse mean interval under the deterministic drive.
pub fn tmf_rhs(spec: &NetworkSpec, beta: &[f64], _cfg: &SolverConfig) -> Result<RateVector> {
    spec.ensure_valid()?;
    check_rates(spec, beta)?;
    let alpha = drive(spec, beta);
    let out = (0..spec.len())
        .map(|i| {
            let tau = spec.tau[i];
            let interval = if tau.is_finite() {
                relaxing_interval(tau, spec.r[i], spec.b[i] + tau * alpha[i])?
            } else {
                counting_interval(spec.r[i], alpha[i])?
            };
            Ok(1.0 / interval)
        })
        .collect::<Result<Vec<_>>>()?;
    RateVector::new(out)
}

/// Same iteration and stopping rule as [`crate::rmf::solve_rmf`].
pub fn solve_tmf(spec: &NetworkSpec, cfg: &SolverConfig, beta0: Option<&[f64]>) -> Result<SolveReport> {
    iterate_fixed_point(spec, cfg, beta0, |beta| tmf_rhs(spec, beta, cfg))
}

struct Neuron {
    tau: f64,
    r: f64,
    s: f64,
    beta: f64,
}

fn solved_neuron(spec: &NetworkSpec, beta: &[f64], i: usize, function: &'static str) -> Result<Neuron> {
    if i >= spec.len() {
        return Err(Error::InvalidArgument(format!("neuron index {i} out of range")));
    }
    let state = TmfState::new(spec, beta)?;
    let tau = spec.tau[i];
    if tau.is_infinite() {
        return Err(Error::Domain {
            function,
            detail: "stationary law is only available for finite tau".into(),
        });
    }
    let f = 1.0 / relaxing_interval(tau, spec.r[i], state.s[i])?;
    let residual = ((f - beta[i]) / beta[i]).abs();
    if residual > FIXED_POINT_TOL {
        return Err(Error::NotAtFixedPoint { neuron: i, residual });
    }
    Ok(Neuron {
        tau,
        r: spec.r[i],
        s: state.s[i],
        beta: beta[i],
    })
}

/// Stationary density of `λ_i`, supported on `[r_i, s_i]`.
pub fn tmf_density(spec: &NetworkSpec, beta: &[f64], i: usize, lambda: f64) -> Result<f64> {
    let n = solved_neuron(spec, beta, i, "tmf_density")?;
    if n.s - n.r < DEGENERATE_GAP * n.s {
        return Err(Error::PointMass { neuron: i });
    }
    if !(lambda >= n.r && lambda < n.s) {
        return Ok(0.0);
    }
    let ln = n.tau * (lambda - n.r) - (n.s - lambda).ln()
        + n.tau * n.s * ((n.s - lambda) / (n.s - n.r)).ln()
        + (n.beta * n.tau).ln();
    Ok(ln.exp())
}

/// `E[e^{u λ_i}]` under the stationary TMF density, `u > -τ_i`.
pub fn tmf_mgf(spec: &NetworkSpec, beta: &[f64], i: usize, u: f64) -> Result<f64> {
    let n = solved_neuron(spec, beta, i, "tmf_mgf")?;
    if !(u > -n.tau) {
        return Err(Error::Domain {
            function: "tmf_mgf",
            detail: format!("u = {u}; need u > -tau = {}", -n.tau),
        });
    }
    let gap = n.s - n.r;
    if gap < DEGENERATE_GAP * n.s {
        return Ok((u * n.s).exp());
    }
    let a = n.tau * n.s;
    let y = gap * (n.tau + u);
    // β τ e^{su + (s-r)τ} γ(a, y) / y^a  =  β τ e^{su + (s-r)τ - y} · e^y γ(a,y)/y^a
    let ln = (n.beta * n.tau).ln() + n.s * u + gap * n.tau - y + ln_scaled_lower_gamma(a, y)?;
    Ok(ln.exp())
}

//! Rate-transfer function of a single neuron driven by independent Poisson
//! inputs, with its large-rate and large-weight asymptotes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::renewal::RenewalKernel;
use crate::rmf::SolverConfig;
use crate::specfun::ln_scaled_lower_gamma;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferQuery {
    /// `f64::INFINITY` for a counting synapse
    pub tau: f64,
    pub b: f64,
    pub r: f64,
    /// `(rate β_j, weight μ_j)`
    pub inputs: Vec<(f64, f64)>,
}

impl TransferQuery {
    pub fn new(tau: f64, b: f64, r: f64, inputs: Vec<(f64, f64)>) -> Result<Self> {
        let q = Self { tau, b, r, inputs };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.tau > 0.0) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.r > 0.0 && self.r <= self.b && self.b.is_finite()) {
            return bad(format!("need 0 < r <= b, got r = {}, b = {}", self.r, self.b));
        }
        if self.tau.is_infinite() && self.r != self.b {
            return bad("counting synapse requires r = b".into());
        }
        for &(rate, weight) in &self.inputs {
            if !(rate >= 0.0 && rate.is_finite() && weight >= 0.0 && weight.is_finite()) {
                return bad(format!("input ({rate}, {weight}) must be nonnegative and finite"));
            }
        }
        Ok(())
    }

    fn total_rate(&self) -> f64 {
        self.inputs.iter().map(|&(rate, _)| rate).sum()
    }
}

/// Stationary output rate `F`, the inverse mean inter-spike interval.
pub fn transfer_eval(q: &TransferQuery, cfg: &SolverConfig) -> Result<f64> {
    q.validate()?;
    let kernel = RenewalKernel::new(q.tau, q.b, q.r, q.inputs.iter().copied());
    Ok(1.0 / kernel.mean_interval(&cfg.tolerances())?)
}

/// Large-rate asymptote `(2/π Σ_j μ_j β_j)^{1/2}`.
pub fn sqrt_asymptote(q: &TransferQuery) -> Result<f64> {
    let drive: f64 = q.inputs.iter().map(|&(rate, weight)| rate * weight).sum();
    if !(drive > 0.0) {
        return Err(Error::InvalidArgument("square-root asymptote needs nonzero interaction".into()));
    }
    Ok((2.0 / std::f64::consts::PI * drive).sqrt())
}

/// Large-weight saturation level `β̄`, reached when every input spike forces
/// an immediate output spike, and the first-order correction
/// `β̄ (1 - Σ_j β_j/μ_j)`. The correction is `None` when some weight is zero
/// or when `Σ_j β_j/μ_j ≥ 1`, where the first-order form no longer applies.
pub fn saturation_bound(q: &TransferQuery) -> Result<(f64, Option<f64>)> {
    q.validate()?;
    if q.tau.is_infinite() {
        return Err(Error::Domain {
            function: "saturation_bound",
            detail: "requires finite tau".into(),
        });
    }
    let total = q.total_rate();
    let a = q.tau * (q.b - q.r);
    let shape = q.tau * (q.b + total);
    let beta_bar = if a == 0.0 {
        q.b + total
    } else {
        // 1/β̄ = τ e^a γ(shape, a) / a^shape
        1.0 / (q.tau * ln_scaled_lower_gamma(shape, a)?.exp())
    };
    let corrected = if q.inputs.iter().any(|&(_, w)| w == 0.0) {
        None
    } else {
        let loss: f64 = q.inputs.iter().map(|&(rate, weight)| rate / weight).sum();
        (loss < 1.0).then(|| beta_bar * (1.0 - loss))
    };
    Ok((beta_bar, corrected))
}

//! Inter-spike survival of a single neuron bombarded by independent Poisson
//! inputs. This is the integrand shared by the RMF self-consistency map and
//! the rate-transfer function.
//!
//! With `Φ(t) = h(-t) + Σ_j β_j h_j(-t) - l(-t)` the survival is
//! `P(S > t) = exp(-Φ(t))`, and `Φ' = κ` is a nondecreasing hazard. Convexity
//! of `Φ` gives the certified tail bound `∫_T^∞ e^{-Φ} ≤ e^{-Φ(T)} / κ(T)`.

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadConfig};
use crate::specfun::expint_ei_scaled;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_43;

/// Above this `τμ` the Ei difference is evaluated through `e^{-x} Ei(x)`.
const SERIES_MAX_Y: f64 = 50.0;

#[derive(Debug, Clone, Copy)]
struct Input {
    rate: f64,
    weight: f64,
    /// `τμ` for relaxing neurons, unused for counting synapses
    y: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct RenewalKernel {
    tau: f64,
    b: f64,
    r: f64,
    inputs: Vec<Input>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub tail: f64,
}

impl RenewalKernel {
    /// `inputs` are `(rate β_j, weight μ_j)` pairs; zero weights drop out.
    pub fn new(tau: f64, b: f64, r: f64, inputs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let inputs = inputs
            .into_iter()
            .filter(|&(rate, weight)| weight > 0.0 && rate > 0.0)
            .map(|(rate, weight)| Input {
                rate,
                weight,
                y: if tau.is_finite() { tau * weight } else { weight },
            })
            .collect();
        Self { tau, b, r, inputs }
    }

    fn counting(&self) -> bool {
        self.tau.is_infinite()
    }

    /// `h_j(-t)` for one input: the expected integrated intensity lost, per
    /// unit input rate, relative to a neuron that jumps on every input.
    fn input_term(&self, input: &Input, t: f64) -> f64 {
        if self.counting() {
            return t + (-input.weight * t).exp_m1() / input.weight;
        }
        let tau = self.tau;
        let y = input.y;
        let s = -t / tau;
        let w = s.exp();
        // e^{-y} (Ei(y e^s) - Ei(y))
        let scaled_diff = if y <= SERIES_MAX_Y {
            // s + Σ_{n≥1} y^n (e^{ns} - 1) / (n·n!), all terms share a sign
            let e1 = s.exp_m1();
            let mut em = e1;
            let mut coef = y;
            let mut sum = coef * em;
            let mut n = 1.0;
            loop {
                n += 1.0;
                coef *= y / n;
                em = em * w + e1;
                let term = coef * em / n;
                sum += term;
                if term.abs() <= 1e-17 * sum.abs() || n > 400.0 {
                    break;
                }
            }
            (-y).exp() * (s + sum)
        } else if y * w > 1e-10 {
            (y * (w - 1.0)).exp() * expint_ei_scaled(y * w) - expint_ei_scaled(y)
        } else {
            // Ei(z) = γ + ln z + z + O(z²) for the far tail
            (-y).exp() * (EULER_GAMMA + y.ln() + s + y * w) - expint_ei_scaled(y)
        };
        tau * scaled_diff + t
    }

    /// `Φ(t) = -ln P(S > t)`, `t ≥ 0`.
    pub fn phi(&self, t: f64) -> f64 {
        let own = if self.counting() {
            self.r * t
        } else {
            let em = (-t / self.tau).exp_m1();
            self.b * t + self.tau * (self.b - self.r) * em
        };
        own + self
            .inputs
            .iter()
            .map(|inp| inp.rate * self.input_term(inp, t))
            .sum::<f64>()
    }

    /// `Φ'(t)`, the hazard of the renewal interval.
    pub fn hazard(&self, t: f64) -> f64 {
        if self.counting() {
            self.r
                + self
                    .inputs
                    .iter()
                    .map(|inp| -inp.rate * (-inp.weight * t).exp_m1())
                    .sum::<f64>()
        } else {
            let em = (-t / self.tau).exp_m1();
            let w = em + 1.0;
            self.b + (self.r - self.b) * w
                + self
                    .inputs
                    .iter()
                    .map(|inp| -inp.rate * (inp.y * em).exp_m1())
                    .sum::<f64>()
        }
    }

    /// Supremum of the hazard over `t ≥ 0`.
    pub fn hazard_sup(&self) -> f64 {
        if self.counting() {
            self.r + self.inputs.iter().map(|inp| inp.rate).sum::<f64>()
        } else {
            self.b
                + self
                    .inputs
                    .iter()
                    .map(|inp| -inp.rate * (-inp.y).exp_m1())
                    .sum::<f64>()
        }
    }

    /// Smallest doubling step `T > t0` with
    /// `∫_T^∞ e^{Φ(t0)-Φ} ≤ tail · ∫_{t0}^∞ e^{Φ(t0)-Φ}`, using
    /// `∫_{t0}^∞ e^{Φ(t0)-Φ} ≥ 1/κ_sup`.
    pub fn truncation_point(&self, t0: f64, tail: f64) -> f64 {
        let phi0 = self.phi(t0);
        let k_sup = self.hazard_sup();
        let mut step = 1.0 / self.hazard(t0);
        for _ in 0..2000 {
            let t = t0 + step;
            let bound = (phi0 - self.phi(t)).exp() * k_sup / self.hazard(t);
            if bound <= tail {
                return t;
            }
            step *= 2.0;
        }
        t0 + step
    }

    /// `∫_{t0}^∞ exp(Φ(t0) - Φ(t)) dt`.
    pub fn tail_integral(&self, t0: f64, tol: &Tolerances) -> Result<f64> {
        let phi0 = self.phi(t0);
        let t_max = self.truncation_point(t0, tol.tail);
        let cfg = QuadConfig {
            rel_tol: tol.rel,
            abs_tol: tol.abs,
            max_subdivisions: 4000,
        };
        let res = integrate(|t| (phi0 - self.phi(t)).exp(), t0, t_max, &cfg)?;
        if !res.value.is_finite() || res.value <= 0.0 {
            return Err(Error::Quadrature {
                estimate: res.value,
                error: res.error,
            });
        }
        Ok(res.value)
    }

    /// Mean inter-spike interval `E[S] = ∫_0^∞ P(S > t) dt`; its inverse is the
    /// output rate.
    pub fn mean_interval(&self, tol: &Tolerances) -> Result<f64> {
        self.tail_integral(0.0, tol)
    }
}

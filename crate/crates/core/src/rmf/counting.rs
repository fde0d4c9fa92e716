//! Closed-form replica-mean-field solution of the homogeneous, fully connected
//! counting model (`τ = ∞`, `r = b`, all weights `μ`).
//!
//! With `x = b/μ`, `c = (K-1)β/μ` and `a = c + x`, the rate is fixed by
//! `f(c) = c^{1-a} e^c γ(a, c) = K - 1`, where `f` is strictly increasing
//! from 0 to ∞. The stationary law of the count `C` of spikes received since
//! the last reset is `p(n) = (β/μ) c^n / (a(a+1)…(a+n))`.

use crate::error::{Error, Result};
use crate::specfun::log_lower_gamma;

fn check(k: usize, b: f64, mu: f64) -> Result<()> {
    if k == 0 || !(b > 0.0 && b.is_finite()) || !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "counting model needs K >= 1, b > 0, mu >= 0 (got K={k}, b={b}, mu={mu})"
        )));
    }
    Ok(())
}

/// `ln f(c)` for `f(c) = c^{1-(x+c)} e^c γ(x+c, c)`.
pub fn ln_balance(c: f64, x: f64) -> f64 {
    let a = x + c;
    let lg = log_lower_gamma(a, c).expect("a > 0, c > 0").ln();
    (1.0 - a) * c.ln() + c + lg
}

/// Unique positive `c` with `f(c) = y`, by bisection on `ln c`.
pub fn solve_balance(x: f64, y: f64) -> f64 {
    let target = y.ln();
    // f(c) <= c/x, so c = x·y/2 lies below the root
    let mut lo = 0.5 * x * y;
    while ln_balance(lo, x) >= target {
        lo *= 0.5;
    }
    let mut hi = lo.max(1.0);
    while ln_balance(hi, x) < target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if ln_balance(mid, x) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 2.0 * f64::EPSILON {
            break;
        }
    }
    (lo * hi).sqrt()
}

struct CountingSolution {
    beta: f64,
    a: f64,
    c: f64,
}

fn solve(k: usize, b: f64, mu: f64) -> Result<CountingSolution> {
    check(k, b, mu)?;
    if mu == 0.0 || k == 1 {
        return Ok(CountingSolution {
            beta: b,
            a: f64::INFINITY,
            c: 0.0,
        });
    }
    let x = b / mu;
    let c = solve_balance(x, (k - 1) as f64);
    Ok(CountingSolution {
        beta: mu * c / (k - 1) as f64,
        a: c + x,
        c,
    })
}

/// Stationary firing rate of the homogeneous counting model.
pub fn counting_rate(k: usize, b: f64, mu: f64) -> Result<f64> {
    Ok(solve(k, b, mu)?.beta)
}

/// Truncated stationary distribution of the received-spike count.
#[derive(Debug, Clone)]
pub struct CountingDistribution {
    pub beta: f64,
    /// `p(0), …, p(n_max)`
    pub probs: Vec<f64>,
    /// Upper bound on `Σ_{n > n_max} p(n)`.
    pub tail_mass: f64,
}

impl CountingDistribution {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

pub fn counting_distribution(k: usize, b: f64, mu: f64, n_max: usize) -> Result<CountingDistribution> {
    build_distribution(k, b, mu, |n, _| n >= n_max)
}

/// Extends `n_max` until the reported tail mass drops below `tail_tol`.
pub fn counting_distribution_to_tail(k: usize, b: f64, mu: f64, tail_tol: f64) -> Result<CountingDistribution> {
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidArgument("tail tolerance must be positive".into()));
    }
    build_distribution(k, b, mu, |_, tail| tail < tail_tol)
}

fn build_distribution(
    k: usize,
    b: f64,
    mu: f64,
    mut done: impl FnMut(usize, f64) -> bool,
) -> Result<CountingDistribution> {
    let sol = solve(k, b, mu)?;
    let mut probs = Vec::new();
    if k == 1 {
        // nobody to receive from
        return Ok(CountingDistribution {
            beta: sol.beta,
            probs: vec![1.0],
            tail_mass: 0.0,
        });
    }
    if mu == 0.0 {
        // geometric: other neurons' spikes during an Exp(b) interval
        let q = b / (b + (k - 1) as f64);
        let mut p = q;
        let mut survive = 1.0 - q;
        probs.push(p);
        while !done(probs.len() - 1, survive) {
            p *= 1.0 - q;
            survive *= 1.0 - q;
            probs.push(p);
        }
        return Ok(CountingDistribution {
            beta: sol.beta,
            probs,
            tail_mass: survive,
        });
    }
    let CountingSolution { beta, a, c } = sol;
    let ln_c = c.ln();
    // ln p(0) = ln(β/μ) - ln a
    let mut ln_p = (beta / mu).ln() - a.ln();
    let mut n = 0usize;
    loop {
        probs.push(ln_p.exp());
        // p(n+1)/p(n) = c/(a+n+1), decreasing in n
        let ratio = c / (a + n as f64 + 1.0);
        let tail = ln_p.exp() * ratio / (1.0 - ratio);
        if done(n, tail) {
            return Ok(CountingDistribution {
                beta,
                probs,
                tail_mass: tail,
            });
        }
        n += 1;
        ln_p += ln_c - (a + n as f64).ln();
    }
}

/// Probability-generating function of the received-spike count at `z ∈ [0, 1]`.
pub fn counting_pgf(k: usize, b: f64, mu: f64, z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain {
            function: "counting_pgf",
            detail: format!("z = {z}; need 0 <= z <= 1"),
        });
    }
    let sol = solve(k, b, mu)?;
    if k == 1 {
        return Ok(1.0);
    }
    if mu == 0.0 {
        return Ok(b / (b + (k - 1) as f64 * (1.0 - z)));
    }
    let CountingSolution { beta, a, c } = sol;
    if z == 0.0 {
        // analytic limit: G(0) = p(0)
        return Ok(beta / (mu * a));
    }
    let ln_g = c * (z - 1.0) - a * z.ln() + log_lower_gamma(a, z * c)?.ln() - log_lower_gamma(a, c)?.ln();
    Ok(ln_g.exp())
}

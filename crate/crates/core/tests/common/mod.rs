#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

pub struct Ctmc {
    pub rates: (f64, f64),
    /// Stationary mass on the truncation boundary.
    pub edge_mass: f64,
}

/// Stationary spike rates of a two-neuron counting network
/// (`λ_i = b + μ C_i`, spike of `i` resets `C_i` and increments `C_j`),
/// from the master equation truncated at count `n_max`.
///
/// Recurrent states are `(0, n)` for `n ≥ 0` and `(n, 0)` for `n ≥ 1`.
pub fn two_neuron_ctmc(b: f64, mu: f64, n_max: usize) -> Ctmc {
    // index 0..=n_max: (0, n); n_max+1..: (n, 0) with n = idx - n_max
    let dim = 2 * n_max + 1;
    let zero_n = |n: usize| n;
    let n_zero = |n: usize| if n == 0 { 0 } else { n_max + n };
    let mut q = DMatrix::<f64>::zeros(dim, dim);
    let mut add = |from: usize, to: usize, rate: f64| {
        if from != to {
            q[(from, to)] += rate;
            q[(from, from)] -= rate;
        }
    };
    for n in 0..=n_max {
        let (c1, c2) = (0.0, n as f64);
        // neuron 1 fires: (0, n) -> (0, n + 1)
        add(zero_n(n), zero_n((n + 1).min(n_max)), b + mu * c1);
        // neuron 2 fires: (0, n) -> (1, 0)
        add(zero_n(n), n_zero(1), b + mu * c2);
    }
    for n in 1..=n_max {
        add(n_zero(n), zero_n(1), b + mu * n as f64);
        add(n_zero(n), n_zero((n + 1).min(n_max)), b);
    }
    // π Q = 0, Σπ = 1
    let mut a = q.transpose();
    for j in 0..dim {
        a[(dim - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(dim);
    rhs[dim - 1] = 1.0;
    let pi = a.lu().solve(&rhs).expect("singular generator");
    let mut rates = (0.0, 0.0);
    for n in 0..=n_max {
        rates.0 += pi[zero_n(n)] * b;
        rates.1 += pi[zero_n(n)] * (b + mu * n as f64);
    }
    for n in 1..=n_max {
        rates.0 += pi[n_zero(n)] * (b + mu * n as f64);
        rates.1 += pi[n_zero(n)] * b;
    }
    Ctmc {
        rates,
        edge_mass: pi[zero_n(n_max)] + pi[n_zero(n_max)],
    }
}

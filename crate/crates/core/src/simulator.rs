//! Exact discrete-event simulation of finite LGL networks and of their
//! M-replica versions.
//!
//! Intensities are stored lazily as `(λ, t_last)` and advanced only when a
//! unit is touched. Candidate events are drawn from per-unit dominating rates
//! `max(λ_i(t_last), b_i)` held in a sum tree; the chosen unit is accepted
//! with probability `λ_i(t)/bound_i` and its bound is refreshed either way.
//! Relaxation is monotone toward `b_i`, so the bound stays valid until the
//! unit is touched again. For counting synapses the bound is exact and the
//! scheme reduces to plain Gillespie.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::NetworkSpec;

const BATCHES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    /// Number of spikes to generate, burn-in included.
    pub max_events: u64,
    pub burn_in_fraction: f64,
    pub seed: u64,
    /// Keep the post-burn-in spike train in [`SimResult::spikes`].
    pub record_spikes: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            max_events: 10_000_000,
            burn_in_fraction: 0.1,
            seed: 0,
            record_spikes: false,
        }
    }
}

impl SimConfig {
    pub fn with_seed(seed: u64, max_events: u64) -> Self {
        Self {
            max_events,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_events == 0 {
            return Err(Error::InvalidArgument("max_events must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(Error::InvalidArgument(format!(
                "burn_in_fraction must lie in [0, 1), got {}",
                self.burn_in_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    /// Post-burn-in rate per neuron, or per class for replica runs.
    pub rates: Vec<f64>,
    pub spike_counts: Vec<u64>,
    /// Length of the post-burn-in window.
    pub elapsed_time: f64,
    /// Batch-means standard error of each rate.
    pub rate_stderr: Vec<f64>,
    /// Inter-spike interval moments; `NaN` with fewer than two intervals.
    pub isi_mean: Vec<f64>,
    pub isi_variance: Vec<f64>,
    /// Post-burn-in `(time, unit)` pairs, when requested. Replica units are
    /// numbered `m * K + i`.
    pub spikes: Option<Vec<(f64, u32)>>,
}

impl SimResult {
    /// `neuron,rate,spikes`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("neuron,rate,spikes\n");
        for (i, (rate, count)) in self.rates.iter().zip(&self.spike_counts).enumerate() {
            let _ = writeln!(out, "{i},{rate},{count}");
        }
        out
    }
}

/// Sum tree over nonnegative weights with O(log n) update and sampling.
struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    fn new(weights: &[f64]) -> Self {
        let leaves = weights.len().next_power_of_two();
        let mut nodes = vec![0.0; 2 * leaves];
        nodes[leaves..leaves + weights.len()].copy_from_slice(weights);
        for k in (1..leaves).rev() {
            nodes[k] = nodes[2 * k] + nodes[2 * k + 1];
        }
        Self { leaves, nodes }
    }

    fn total(&self) -> f64 {
        self.nodes[1]
    }

    fn get(&self, i: usize) -> f64 {
        self.nodes[self.leaves + i]
    }

    fn set(&mut self, i: usize, w: f64) {
        let mut k = self.leaves + i;
        self.nodes[k] = w;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    /// Leaf whose cumulative interval contains `target ∈ [0, total)`.
    fn find(&self, mut target: f64) -> usize {
        let mut k = 1;
        while k < self.leaves {
            let left = self.nodes[2 * k];
            if target < left || self.nodes[2 * k + 1] == 0.0 {
                k *= 2;
            } else {
                target -= left;
                k = 2 * k + 1;
            }
        }
        k - self.leaves
    }
}

#[derive(Clone, Copy)]
struct Params {
    tau: f64,
    b: f64,
    r: f64,
}

impl Params {
    fn at(&self, lambda: f64, dt: f64) -> f64 {
        if self.tau.is_infinite() || dt == 0.0 {
            lambda
        } else {
            self.b + (lambda - self.b) * (-dt / self.tau).exp()
        }
    }

    fn bound(&self, lambda: f64) -> f64 {
        lambda.max(if self.tau.is_infinite() { lambda } else { self.b })
    }
}

/// Running mean and variance.
#[derive(Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Welford) {
        if o.n == 0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64;
        self.n = n;
    }

    fn mean(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            self.mean
        }
    }

    fn variance(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }
}

/// Where a spike of a unit delivers its weights.
trait Routing {
    fn targets(&mut self, unit: usize, out: &mut Vec<(usize, f64)>);
}

struct Direct<'a> {
    outgoing: &'a [Vec<(usize, f64)>],
}

impl Routing for Direct<'_> {
    fn targets(&mut self, unit: usize, out: &mut Vec<(usize, f64)>) {
        out.extend_from_slice(&self.outgoing[unit]);
    }
}

struct Replicated<'a> {
    outgoing: &'a [Vec<(usize, f64)>],
    k: usize,
    m: usize,
    rng: ChaCha8Rng,
}

impl Routing for Replicated<'_> {
    fn targets(&mut self, unit: usize, out: &mut Vec<(usize, f64)>) {
        let (replica, class) = (unit / self.k, unit % self.k);
        for &(j, mu) in &self.outgoing[class] {
            let mut v = self.rng.random_range(0..self.m - 1);
            if v >= replica {
                v += 1;
            }
            out.push((v * self.k + j, mu));
        }
    }
}

struct Outcome {
    counts: Vec<u64>,
    elapsed: f64,
    /// `(time, per-unit counts)` at batch boundaries
    batch_counts: Vec<Vec<u64>>,
    batch_times: Vec<f64>,
    isi: Vec<Welford>,
    spikes: Option<Vec<(f64, u32)>>,
}

fn run(params: &[Params], routing: &mut impl Routing, cfg: &SimConfig) -> Outcome {
    let n = params.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut lambda: Vec<f64> = params.iter().map(|p| p.b).collect();
    let mut t_last = vec![0.0; n];
    let bounds: Vec<f64> = params.iter().zip(&lambda).map(|(p, &l)| p.bound(l)).collect();
    let mut tree = SumTree::new(&bounds);

    let burn = (cfg.burn_in_fraction * cfg.max_events as f64).floor() as u64;
    let window = cfg.max_events - burn;
    let batches = (BATCHES as u64).min(window) as usize;
    let batch_len = window / batches as u64;

    let mut counts = vec![0u64; n];
    let mut last_spike = vec![f64::NAN; n];
    let mut isi = vec![Welford::default(); n];
    let mut batch_counts = Vec::with_capacity(batches);
    let mut batch_times = Vec::with_capacity(batches);
    let mut spikes = cfg.record_spikes.then(Vec::new);
    let mut scratch = Vec::new();

    let mut t = 0.0;
    let mut t_start = 0.0;
    let mut emitted = 0u64;
    while emitted < cfg.max_events {
        let total = tree.total();
        let dt: f64 = rng.sample::<f64, _>(Exp1) / total;
        t += dt;
        let u = tree.find(rng.random::<f64>() * total);
        let p = params[u];
        let bound = tree.get(u);
        let now = p.at(lambda[u], t - t_last[u]);
        debug_assert!(now <= bound * (1.0 + 1e-12), "intensity {now} above bound {bound}");
        let accept = p.tau.is_infinite() || rng.random::<f64>() * bound < now;
        if !accept {
            lambda[u] = now;
            t_last[u] = t;
            tree.set(u, p.bound(now));
            continue;
        }

        lambda[u] = p.r;
        t_last[u] = t;
        tree.set(u, p.bound(p.r));
        scratch.clear();
        routing.targets(u, &mut scratch);
        for &(v, mu) in &scratch {
            let q = params[v];
            let l = q.at(lambda[v], t - t_last[v]) + mu;
            lambda[v] = l;
            t_last[v] = t;
            tree.set(v, q.bound(l));
        }

        emitted += 1;
        if emitted <= burn {
            t_start = t;
        } else {
            counts[u] += 1;
            if !last_spike[u].is_nan() {
                isi[u].push(t - last_spike[u]);
            }
            if let Some(s) = spikes.as_mut() {
                s.push((t, u as u32));
            }
            let in_window = emitted - burn;
            if in_window % batch_len == 0 && batch_counts.len() < batches {
                batch_counts.push(counts.clone());
                batch_times.push(t);
            }
        }
        last_spike[u] = t;
    }
    Outcome {
        counts,
        elapsed: t - t_start,
        batch_counts,
        batch_times: batch_times.into_iter().map(|bt| bt - t_start).collect(),
        isi,
        spikes,
    }
}

/// Collapses unit statistics onto `classes` groups of `per_class` units each.
fn summarize(out: Outcome, classes: usize, class_of: impl Fn(usize) -> usize, per_class: f64) -> SimResult {
    let mut counts = vec![0u64; classes];
    let mut isi = vec![Welford::default(); classes];
    for (u, &c) in out.counts.iter().enumerate() {
        counts[class_of(u)] += c;
        isi[class_of(u)].merge(&out.isi[u]);
    }
    let rates: Vec<f64> = counts.iter().map(|&c| c as f64 / (per_class * out.elapsed)).collect();

    let mut batch_rates = vec![Vec::new(); classes];
    let mut prev_time = 0.0;
    let mut prev = vec![0u64; out.counts.len()];
    for (snap, &bt) in out.batch_counts.iter().zip(&out.batch_times) {
        let mut per = vec![0u64; classes];
        for (u, (&now, &before)) in snap.iter().zip(&prev).enumerate() {
            per[class_of(u)] += now - before;
        }
        for (c, &k) in per.iter().enumerate() {
            batch_rates[c].push(k as f64 / (per_class * (bt - prev_time)));
        }
        prev_time = bt;
        prev.clone_from(snap);
    }
    let rate_stderr = batch_rates
        .iter()
        .map(|xs| {
            if xs.len() < 2 {
                return f64::NAN;
            }
            let mut w = Welford::default();
            xs.iter().for_each(|&x| w.push(x));
            (w.variance() / xs.len() as f64).sqrt()
        })
        .collect();

    SimResult {
        rates,
        spike_counts: counts,
        elapsed_time: out.elapsed,
        rate_stderr,
        isi_mean: isi.iter().map(Welford::mean).collect(),
        isi_variance: isi.iter().map(Welford::variance).collect(),
        spikes: out.spikes,
    }
}

fn params_of(spec: &NetworkSpec) -> Vec<Params> {
    (0..spec.len())
        .map(|i| Params {
            tau: spec.tau[i],
            b: spec.b[i],
            r: spec.r[i],
        })
        .collect()
}

/// Simulates the network from `λ(0) = b` until `cfg.max_events` spikes.
pub fn simulate_lgl(spec: &NetworkSpec, cfg: &SimConfig) -> Result<SimResult> {
    spec.ensure_valid()?;
    cfg.validate()?;
    let outgoing = spec.outgoing();
    let params = params_of(spec);
    let out = run(&params, &mut Direct { outgoing: &outgoing }, cfg);
    Ok(summarize(out, spec.len(), |u| u, 1.0))
}

/// Simulates `m` replicas of the network where every delivery goes to a
/// uniformly chosen other replica; rates are per class.
pub fn simulate_replica(spec: &NetworkSpec, m: usize, cfg: &SimConfig) -> Result<SimResult> {
    spec.ensure_valid()?;
    cfg.validate()?;
    if m < 2 {
        return Err(Error::InvalidArgument(format!("replica count must be at least 2, got {m}")));
    }
    let k = spec.len();
    let outgoing = spec.outgoing();
    let base = params_of(spec);
    let params: Vec<Params> = (0..m * k).map(|u| base[u % k]).collect();
    let mut routing = Replicated {
        outgoing: &outgoing,
        k,
        m,
        rng: {
            let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
            r.set_stream(1);
            r
        },
    };
    let out = run(&params, &mut routing, cfg);
    Ok(summarize(out, k, |u| u % k, m as f64))
}

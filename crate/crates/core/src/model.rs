//! Network data model: parameters of a linear Galves–Löcherbach network,
//! validation, benchmark topology generators and the JSON network document.
//!
//! A neuron `i` has stochastic intensity `λ_i` that relaxes exponentially
//! towards its base rate `b_i` with time constant `τ_i`, jumps by `μ_ij` each
//! time a presynaptic neuron `j` spikes, and resets to `r_i` when `i` itself
//! spikes. `τ_i = ∞` (no relaxation) gives the counting-synapse model.

use std::fmt;
use std::ops::Deref;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One excitatory synapse: a spike of `pre` adds `weight` to the intensity of `post`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Synapse {
    pub post: usize,
    pub pre: usize,
    pub weight: f64,
}

/// Full parameterization of a finite network.
///
/// `tau[i] == f64::INFINITY` encodes the counting-synapse limit for neuron `i`.
/// Fields are public so that arbitrary (possibly invalid) documents can be
/// represented and checked with [`NetworkSpec::validate`]; every simulator and
/// solver entry point rejects invalid specs.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub tau: Vec<f64>,
    pub b: Vec<f64>,
    pub r: Vec<f64>,
    pub synapses: Vec<Synapse>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    Empty,
    LengthMismatch,
    BaseNotPositive,
    ResetNotPositive,
    ResetAboveBase,
    TauNotPositive,
    InfiniteTauResetNotBase,
    IndexOutOfRange,
    SelfSynapse,
    DuplicateSynapse,
    NegativeWeight,
}

/// A single invariant violation, tagged with the offending neuron or synapse.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub neuron: Option<usize>,
    pub synapse: Option<(usize, usize)>,
}

impl Violation {
    fn neuron(kind: ViolationKind, i: usize) -> Self {
        Self {
            kind,
            neuron: Some(i),
            synapse: None,
        }
    }

    fn synapse(kind: ViolationKind, s: &Synapse) -> Self {
        Self {
            kind,
            neuron: None,
            synapse: Some((s.post, s.pre)),
        }
    }

    pub fn message(&self) -> &'static str {
        match self.kind {
            ViolationKind::Empty => "network must contain at least one neuron",
            ViolationKind::LengthMismatch => "parameter vectors must all have length K",
            ViolationKind::BaseNotPositive => "base rate must be strictly positive",
            ViolationKind::ResetNotPositive => "reset must be strictly positive",
            ViolationKind::ResetAboveBase => "reset must not exceed base rate",
            ViolationKind::TauNotPositive => "relaxation time must be positive or infinite",
            ViolationKind::InfiniteTauResetNotBase => {
                "infinite relaxation time requires reset equal to base rate"
            }
            ViolationKind::IndexOutOfRange => "synapse index out of range",
            ViolationKind::SelfSynapse => "self-synapse forbidden",
            ViolationKind::DuplicateSynapse => "duplicate synapse",
            ViolationKind::NegativeWeight => "synaptic weight must be nonnegative and finite",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.message())?;
        if let Some(i) = self.neuron {
            write!(f, " (neuron {i})")?;
        }
        if let Some((i, j)) = self.synapse {
            write!(f, " (synapse {i} <- {j})")?;
        }
        Ok(())
    }
}

impl NetworkSpec {
    /// Builds a spec with synapses in canonical `(post, pre)` order and checks
    /// every invariant.
    pub fn new(tau: Vec<f64>, b: Vec<f64>, r: Vec<f64>, mut synapses: Vec<Synapse>) -> Result<Self> {
        synapses.sort_by_key(|s| (s.post, s.pre));
        let spec = Self { tau, b, r, synapses };
        spec.ensure_valid()?;
        Ok(spec)
    }

    /// `k` uncoupled neurons sharing the same parameters.
    pub fn uniform(k: usize, tau: f64, b: f64, r: f64) -> Self {
        Self {
            tau: vec![tau; k],
            b: vec![b; k],
            r: vec![r; k],
            synapses: Vec::new(),
        }
    }

    /// Fully connected homogeneous counting network (`τ = ∞`, `r = b`).
    pub fn counting(k: usize, b: f64, mu: f64) -> Self {
        let mut spec = Self::uniform(k, f64::INFINITY, b, b);
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    spec.synapses.push(Synapse {
                        post: i,
                        pre: j,
                        weight: mu,
                    });
                }
            }
        }
        spec
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// Returns every invariant violation; an empty vector means the spec is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let k = self.b.len();
        if k == 0 {
            out.push(Violation {
                kind: ViolationKind::Empty,
                neuron: None,
                synapse: None,
            });
        }
        if self.tau.len() != k || self.r.len() != k {
            out.push(Violation {
                kind: ViolationKind::LengthMismatch,
                neuron: None,
                synapse: None,
            });
            return out;
        }
        for i in 0..k {
            let (tau, b, r) = (self.tau[i], self.b[i], self.r[i]);
            if !(b > 0.0 && b.is_finite()) {
                out.push(Violation::neuron(ViolationKind::BaseNotPositive, i));
            }
            if !(r > 0.0 && r.is_finite()) {
                out.push(Violation::neuron(ViolationKind::ResetNotPositive, i));
            } else if r > b {
                out.push(Violation::neuron(ViolationKind::ResetAboveBase, i));
            }
            if !(tau > 0.0) {
                out.push(Violation::neuron(ViolationKind::TauNotPositive, i));
            } else if tau.is_infinite() && r != b {
                out.push(Violation::neuron(ViolationKind::InfiniteTauResetNotBase, i));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for s in &self.synapses {
            if s.post >= k || s.pre >= k {
                out.push(Violation::synapse(ViolationKind::IndexOutOfRange, s));
                continue;
            }
            if s.post == s.pre {
                out.push(Violation::synapse(ViolationKind::SelfSynapse, s));
            }
            if !(s.weight >= 0.0 && s.weight.is_finite()) {
                out.push(Violation::synapse(ViolationKind::NegativeWeight, s));
            }
            if !seen.insert((s.post, s.pre)) {
                out.push(Violation::synapse(ViolationKind::DuplicateSynapse, s));
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(v))
        }
    }

    /// Presynaptic `(pre, weight)` lists, one per neuron.
    pub fn incoming(&self) -> Vec<Vec<(usize, f64)>> {
        let mut inc = vec![Vec::new(); self.len()];
        for s in &self.synapses {
            inc[s.post].push((s.pre, s.weight));
        }
        inc
    }

    /// Postsynaptic `(post, weight)` lists, one per neuron.
    pub fn outgoing(&self) -> Vec<Vec<(usize, f64)>> {
        let mut out = vec![Vec::new(); self.len()];
        for s in &self.synapses {
            out[s.pre].push((s.post, s.weight));
        }
        out
    }

    /// Neurons without presynaptic partners (the driving layer of a feedforward net).
    pub fn driving_neurons(&self) -> Vec<bool> {
        let mut driving = vec![true; self.len()];
        for s in &self.synapses {
            driving[s.post] = false;
        }
        driving
    }

    pub fn all_counting(&self) -> bool {
        self.tau.iter().all(|t| t.is_infinite())
    }

    /// Canonical JSON document, see [`NetworkSpec::load`].
    pub fn save(&self) -> String {
        let mut synapses: Vec<_> = self.synapses.iter().map(|s| (s.post, s.pre, s.weight)).collect();
        synapses.sort_by_key(|&(i, j, _)| (i, j));
        let doc = NetworkDoc {
            k: self.len(),
            tau: self
                .tau
                .iter()
                .map(|&t| if t.is_infinite() { None } else { Some(t) })
                .collect(),
            b: self.b.clone(),
            r: self.r.clone(),
            synapses,
        };
        serde_json::to_string_pretty(&doc).expect("network document serializes")
    }

    /// Parses a network document `{K, tau, b, r, synapses: [[i, j, mu], ...]}`
    /// (0-based indices, `null` relaxation time = infinite) and validates it.
    pub fn load(text: &str) -> Result<Self> {
        let doc: NetworkDoc = serde_json::from_str(text)?;
        if doc.tau.len() != doc.k || doc.b.len() != doc.k || doc.r.len() != doc.k {
            return Err(Error::InvalidSpec(vec![Violation {
                kind: ViolationKind::LengthMismatch,
                neuron: None,
                synapse: None,
            }]));
        }
        let tau = doc.tau.into_iter().map(|t| t.unwrap_or(f64::INFINITY)).collect();
        let synapses = doc
            .synapses
            .into_iter()
            .map(|(post, pre, weight)| Synapse { post, pre, weight })
            .collect();
        Self::new(tau, doc.b, doc.r, synapses)
    }

    /// SHA-256 of the canonical document, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.save().as_bytes()))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    #[serde(rename = "K")]
    k: usize,
    tau: Vec<Option<f64>>,
    b: Vec<f64>,
    r: Vec<f64>,
    synapses: Vec<(usize, usize, f64)>,
}

/// Per-neuron stationary firing rates, strictly positive and finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct RateVector(Vec<f64>);

impl RateVector {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if let Some((i, &v)) = beta.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "rate of neuron {i} must be positive and finite, got {v}"
            )));
        }
        Ok(Self(beta))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for RateVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn uniform_weight(rng: &mut ChaCha8Rng, weight_max: f64) -> f64 {
    // (0, weight_max]
    weight_max * (1.0 - rng.random::<f64>())
}

fn check_generator_args(weight_max: f64, base: f64, tau: f64) -> Result<()> {
    if !(weight_max > 0.0 && weight_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("weight_max must be positive, got {weight_max}")));
    }
    if !(base > 0.0 && base.is_finite()) {
        return Err(Error::InvalidArgument(format!("base rate must be positive, got {base}")));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau must be positive or infinite, got {tau}")));
    }
    Ok(())
}

/// Random recurrent network: every neuron draws exactly `in_degree` distinct
/// presynaptic partners uniformly from the other `k - 1` neurons, with weights
/// i.i.d. uniform on `(0, weight_max]` and `b = r = base`.
pub fn gen_random_recurrent(
    k: usize,
    in_degree: usize,
    weight_max: f64,
    base: f64,
    tau: f64,
    seed: u64,
) -> Result<NetworkSpec> {
    if k == 0 {
        return Err(Error::InvalidArgument("network needs at least one neuron".into()));
    }
    if in_degree > k - 1 {
        return Err(Error::InvalidArgument(format!(
            "in_degree {in_degree} exceeds the {} available partners",
            k - 1
        )));
    }
    check_generator_args(weight_max, base, tau)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut synapses = Vec::with_capacity(k * in_degree);
    for i in 0..k {
        // sample from 0..k-1 and skip over i
        let mut pres: Vec<usize> = sample(&mut rng, k - 1, in_degree)
            .into_iter()
            .map(|j| if j >= i { j + 1 } else { j })
            .collect();
        pres.sort_unstable();
        for j in pres {
            let weight = uniform_weight(&mut rng, weight_max);
            synapses.push(Synapse { post: i, pre: j, weight });
        }
    }
    NetworkSpec::new(vec![tau; k], vec![base; k], vec![base; k], synapses)
}

/// Layered feedforward network of `layers × width` neurons. Neurons of the
/// first (driving) layer receive nothing; every other neuron draws exactly
/// `in_degree` distinct partners from the previous layer.
pub fn gen_feedforward(
    layers: usize,
    width: usize,
    in_degree: usize,
    weight_max: f64,
    base: f64,
    tau: f64,
    seed: u64,
) -> Result<NetworkSpec> {
    if layers == 0 || width == 0 {
        return Err(Error::InvalidArgument("layers and width must be at least 1".into()));
    }
    if in_degree > width {
        return Err(Error::InvalidArgument(format!(
            "in_degree {in_degree} exceeds layer width {width}"
        )));
    }
    check_generator_args(weight_max, base, tau)?;
    let k = layers * width;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut synapses = Vec::with_capacity(k * in_degree);
    for layer in 1..layers {
        let prev = (layer - 1) * width;
        for post in layer * width..(layer + 1) * width {
            let mut pres: Vec<usize> = sample(&mut rng, width, in_degree).into_iter().map(|j| prev + j).collect();
            pres.sort_unstable();
            for pre in pres {
                let weight = uniform_weight(&mut rng, weight_max);
                synapses.push(Synapse { post, pre, weight });
            }
        }
    }
    NetworkSpec::new(vec![tau; k], vec![base; k], vec![base; k], synapses)
}

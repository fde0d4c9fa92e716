//! Exact simulation and mean-field rate solvers for linear Galves–Löcherbach
//! (LGL) spiking networks.
//!
//! * [`model`] network parameters, benchmark generators, JSON documents
//! * [`simulator`] exact discrete-event simulation of finite and replica networks
//! * [`rmf`] replica-mean-field self-consistency (closed form and quadrature)
//! * [`tmf`] thermodynamic-mean-field baseline
//! * [`transfer`] single-neuron rate-transfer function and its asymptotes
//! * [`harness`] benchmark scenarios and comparison reports

pub mod error;
pub mod harness;
pub mod model;
pub mod quad;
mod renewal;
pub mod rmf;
pub mod simulator;
pub mod specfun;
pub mod tmf;
pub mod transfer;

pub use error::{Error, Result};
pub use model::{NetworkSpec, RateVector, Synapse};

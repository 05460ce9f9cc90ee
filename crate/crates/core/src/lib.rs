//! Shallow ReLU networks, (S)GD training, and step-size stability certificates.
//!
//! The crate trains one- and two-hidden-layer ReLU networks on quadratic loss,
//! computes the exact loss Hessian at interpolating minima through the tangent
//! feature matrix, and evaluates a data-dependent stability norm whose value
//! sandwiches the attainable sharpness: `1 + 2·S_θ ≤ λmax(∇²L)`, with a matching
//! upper bound built from a surrogate weighting function and dataset statistics.
//!
//! Modules mirror the pipeline:
//! - [`linalg`]: dense symmetric eigenpairs, singular triples, covariance.
//! - [`rng`]: the deterministic generator every seeded operation draws from.
//! - [`dataset`]: synthetic regression data, IDX (MNIST) parsing, knot clearance.
//! - [`network`]: forward/gradient/Hessian of the networks, neuron atoms.
//! - [`training`]: full-batch GD and mini-batch SGD with stopping rules.
//! - [`stability`]: weighting functions g̃/g/ĝ, the stability norm, bound checks.
//! - [`analytic`]: closed-form weighting functions and radial densities.
//! - [`pyramid`]: the depth-separation example and its stability demo.

pub mod analytic;
pub mod dataset;
pub mod linalg;
pub mod network;
pub mod pyramid;
pub mod rng;
pub mod stability;
pub mod training;


pub use dataset::{Dataset, DatasetStats};
pub use linalg::{DenseMatrix, EigenResult};
pub use network::{NeuronAtom, ShallowParams, TangentFeatures, TwoLayerParams};
pub use stability::StabilityReport;
pub use training::{TrainConfig, TrainResult, TrainStatus};


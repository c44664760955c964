//! Exact analysis of metric differentially private mechanisms on finite
//! secret spaces: constraint geometry, vertex and kernel enumeration,
//! leakage capacities, and universal optimality checks.

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod loss;
pub mod lp;
pub mod mechanisms;
pub mod metrics;
mod modular;
pub mod optimality;
pub mod precise;
pub mod sampling;
pub mod scalar;

pub use error::{Error, Result};
pub use metrics::{make_metric, MetricKind, MetricSpace, MetricSpec, Mode};
pub use scalar::{Rational, Scalar};

pub type ExactChannel = mechanisms::Channel<Rational>;
pub type FloatChannel = mechanisms::Channel<f64>;
pub type ExactHyper = mechanisms::Hyper<Rational>;
pub type FloatHyper = mechanisms::Hyper<f64>;
pub type ExactLoss = loss::LossFunction<Rational>;
pub type FloatLoss = loss::LossFunction<f64>;
pub type ExactKernel = geometry::KernelMechanism<Rational>;

//! Holographic forward models, Gerchberg-Saxton phase retrieval and Sobol
//! sensitivity analysis of the FMH configuration space.

pub mod corpus;
pub mod error;
pub mod experiment;
pub mod field;
pub mod metrics;
pub mod phase_retrieval;
pub mod propagation;
pub mod rng;
pub mod sensitivity;
pub mod stats;

pub use error::{Error, Result};
pub use field::{ComplexField, Image, IntensityMap, Raster};
pub use metrics::MetricRecord;
pub use phase_retrieval::{gs_run, GsConfig, GsTrace, IterationRecord};
pub use propagation::{Direction, FmhConfig, ForwardModel, Propagator};
pub use rng::SplitMix64;

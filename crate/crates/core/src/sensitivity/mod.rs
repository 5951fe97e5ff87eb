//! Variance-based global sensitivity analysis: Sobol points, Saltelli's
//! design and Sobol index estimation.

pub mod design;
pub mod indices;
pub mod sobol;

pub use design::{saltelli_design, Block, DesignRow, FmhBounds, Parameter, SaltelliDesign};
pub use indices::{sobol_indices, Estimate, SobolIndices, DEFAULT_BOOTSTRAP_RESAMPLES};
pub use sobol::{sobol_points, MAX_DIMENSION};

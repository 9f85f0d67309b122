//! Stabilizer Rényi entropy (SRE) dynamics of thermofield-double states in
//! SYK-type Majorana models.
//!
//! Two independent engines live here:
//!
//! * [`ed`]: exact diagonalization at small `N`. Builds the doubled
//!   (left `ψ` / right `ξ`) Majorana system, the EPR and TFD states, and
//!   enumerates the full Majorana spectrum to get `M₂`, the spectral form
//!   factor and thermal Rényi entropies.
//! * [`sd`]: large-`N` Schwinger–Dyson solvers. A complex-temperature
//!   thermal solver gives the slope of the spectral form factor, and a
//!   contour solver with two junction-phase sectors gives `ln Z_SRE`, the
//!   order parameter `⟨σ⟩` and `M₂/N` on the symmetric and symmetry-broken
//!   saddles.
//!
//! [`dynamics`] drives both saddles along time sweeps, finds the first-order
//! transition time and assembles phase diagrams; [`fitkit`] fits the
//! closed-form curves used to summarize them.

pub mod contour;
pub mod dynamics;
pub mod ed;
pub mod error;
pub mod fitkit;
pub mod numeric;
pub mod sd;

pub use contour::{Branch, BranchClass, ContourGrid, ContourSpec, DerivativeOperator, Sector};
pub use dynamics::{PhaseDiagram, PredictionParams, SreCurve};
pub use ed::{CouplingTensor, MajoranaSpectrum, MajoranaString, ModelParams};
pub use error::{Error, Result};
pub use fitkit::{FitModel, FitResult};
pub use sd::{SaddleClass, SaddleSolution, SeedStrategy, ThermalSolution};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;

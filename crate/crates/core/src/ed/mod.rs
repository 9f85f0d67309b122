//! Exact diagonalization of the doubled SYK system at small `N`.

pub mod couplings;
pub mod disorder;
pub mod hamiltonian;
pub mod majorana;
pub mod spectrum;
pub mod state;
pub mod thermo;

pub use couplings::{Coupling, CouplingTensor, ModelParams};
pub use disorder::{ed_curve, for_realizations, mean_stderr, EdCurve, EdCurvePoint};
pub use hamiltonian::{build_hamiltonian, Hamiltonian, Side};
pub use majorana::{MajoranaString, PauliString};
pub use spectrum::{majorana_spectrum, stabilizer_renyi, MajoranaSpectrum};
pub use state::{build_epr, build_tfd, epr_residual, evolve, Evolver, Tfd};
pub use thermo::{
    averaged_coefficient, exact_renyi2, exact_sff, wightman_coefficient, wightman_complex,
};

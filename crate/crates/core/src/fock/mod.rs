//! Truncated Fock-space numerics: states, density operators, Hermitian
//! eigendecomposition, Hermite functions, fidelity and quadrature.

mod density;
pub mod eigh;
pub mod fidelity;
pub mod hermite;
mod matrix;
pub mod quadrature;
mod state;

pub use density::DensityOperator;
pub use eigh::{eigh, eigh_matrix, HermitianEigen};
pub use fidelity::{bures_deficit, fidelity};
pub use hermite::{hermite, hermite_functions, position_wavefunction};
pub use matrix::CMatrix;
pub use quadrature::{integrate_real_line, AdaptiveIntegral, GaussLegendre, QuadratureGrid};
pub use state::FockVector;

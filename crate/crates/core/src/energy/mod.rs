//! Discrete energies: the localized energy on finite sets, the auxiliary
//! periodic functional, its gradient and the cross term between a
//! fundamental domain and its complement.

pub mod far;
pub mod field;
pub mod local;
pub mod periodic;
pub mod report;
pub mod stencil;
pub mod sum;

pub use far::FarField;
pub use field::{LatticeField, PeriodicField, Perturbed, CLAMP_ABOVE, CLAMP_BELOW, THETA};
pub use local::{kinetic, potential_term, total_energy, LocalEnergy, Partner, SiteSet};
pub use periodic::{
    auxiliary_energy, cross_term, el_residual, energy_gradient, PeriodicEnergy, DEFAULT_CUTOFF,
};
pub use report::{EnergyKind, EnergyReport};
pub use stencil::{cell_averaged_kernel, KernelStencil};
pub use sum::pairwise_sum;

//! Numerical checks on computed fields: interface width, level-set
//! ordering, half-space containment, oscillation decay, local minimality,
//! the localized/periodic energy identity, energy growth on balls, the
//! divergence of the cross-strip interaction, direction sweeps and the
//! limit of truncated kernels.

pub mod checks;
pub mod diverge;
pub mod growth;
pub mod report;
pub mod sweep;
pub mod truncation;

pub use checks::{
    birkhoff_check, ef_relation_check, halfspace_check, integer_box, interface_width,
    is_birkhoff_set, local_minimality_test, oscillation_decay, MinimalityOptions, BIRKHOFF_BAND,
    EF_TOLERANCE,
};
pub use diverge::{divergence_probe, tail_beta};
pub use growth::{energy_growth_profile, growth_exponent, psi, GrowthProfile};
pub use report::{linear_fit, VerificationReport};
pub use sweep::{centred_strip, rational_sweep, sweep_report, SweepRow, SweepSettings};
pub use truncation::truncation_limit;

//! Interaction kernels and double-well potentials, with validators for the
//! structural hypotheses they must satisfy.

pub mod kernel;
pub mod potential;

pub use kernel::{
    anisotropic_bounds, kernel_eval, kernel_truncate, kernel_validate, KernelSpec, KernelValidation, KernelVariant,
    MatrixCoefficient, ScalarCoefficient, TailSpec,
};
pub use potential::{
    potential_eval, potential_validate, PotentialCoefficient, PotentialSpec, PotentialValidation,
    PotentialVariant,
};

/// A kernel and a potential over the same dimension.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Medium {
    pub kernel: KernelSpec,
    pub potential: PotentialSpec,
}

impl Medium {
    pub fn new(kernel: KernelSpec, potential: PotentialSpec) -> crate::Result<Self> {
        if kernel.n != potential.n {
            return Err(crate::Error::Config(format!(
                "kernel dimension {} differs from potential dimension {}",
                kernel.n, potential.n
            )));
        }
        Ok(Self { kernel, potential })
    }

    pub fn dim(&self) -> usize {
        self.kernel.n
    }
}

//! Heat kernel of the tangent group and the second heat invariant.

pub mod duhamel;
pub mod kernel;
pub mod polyop;
pub mod sublaplacian;

pub use duhamel::{assemble_a_ops, c0, c1_estimate, fit_universal_constants, AOperators, C1Options, C1Report, C1Site, UniversalFit};
pub use kernel::{heisenberg_kernel, GroupKernel, KernelContracts};
pub use polyop::PolyDiffOp;
pub use sublaplacian::SubLaplacian;

//! The linearized operator `L = Λ − K`: collision frequency, kernel
//! families, dense assembly and binary dumps.

pub mod assembly;
pub mod dump;
pub mod kernels;
pub mod nu;

pub use assembly::{
    assemble, assemble_k, assemble_lambda, linearized_from, Assembly, AssemblyError, AssemblyOptions, AssemblyReport,
    BlockOperator, CalibrationRule, DiagonalOperator, DiagonalRule,
};
pub use dump::{read_dump, write_dump, DumpError, MatrixKind};
pub use kernels::{kernel_k1, kernel_k2, kernel_k3, kernel_kb, kernel_row, KernelContext, KernelRoute};
pub use nu::{nu, nu_with, NuQuadrature};

//! Small numerical kernels shared by the solver, barriers and diagnostics.

pub mod interp;
pub mod ode;
pub mod quad;
pub mod roots;
pub mod stencil;
pub mod tridiag;

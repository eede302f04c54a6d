//! Numerical kernels shared by the lattice and wideband models.

mod lambert;
mod quadrature;
mod transform;

pub use lambert::lambert_w0;
pub use quadrature::{integrate_trapezoid, trapezoid_uniform, QuadratureSpec};
pub use transform::compound_poisson_log_transform;

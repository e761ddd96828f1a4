//! Quadrature, ODE integration, finite differences and interpolation.

pub mod fd;
pub mod gauss;
pub mod interp;
pub mod ode;
pub mod quad;

//! Geodesics of left-invariant pseudo-Riemannian metrics on SL(2,ℝ) and SL(2,ℂ): normal forms of
//! the defining self-adjoint map, Euler–Arnold fields, completeness verdicts, compactification
//! charts and numerical integration with blow-up detection.

pub mod algebra;
pub mod charts;
pub mod completeness;
pub mod euler_arnold;
pub mod integrator;
pub mod normal_form;
pub mod quadrature;
pub mod sampling;

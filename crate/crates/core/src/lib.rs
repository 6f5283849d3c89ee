//! Numerical laboratory for radial semilinear heat equations
//! `u_t = Δu + f(u, |x|)`: stationary profiles by shooting in Fowler
//! variables, glued barrier families, and a radial parabolic solver that
//! tracks decay or blow-up.

// Range checks are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barriers;
pub mod config;
pub mod experiments;
pub mod export;
pub mod fowler;
pub mod integrate;
pub mod parabolic;
pub mod potential;
pub mod quadrature;
pub mod roots;
pub mod shooting;

pub use potential::{critical_exponents, CriticalExponents, PotentialSpec};

//! Simulation and optimality certificates for impulsive control systems
//!
//! ```text
//! ẋ = f̃(x, u, a) + Σᵢ g̃ᵢ(x, u) u̇ⁱ,    (x, u)(0) = (x₀, u₀)
//! ```
//!
//! whose impulse fields `gᵢ = (g̃ᵢ, eᵢ)` commute. Commuting fields admit a
//! straightening change of coordinates `(ξ, η) = φ(x, z)` in which every
//! `gᵢ` becomes `∂/∂ηᵢ`; the system then reads `ξ̇ = F̃(ξ, u, a)` with no
//! `u̇` term, so controls with jumps can be integrated classically and the
//! original state is recovered pointwise as `(x, u)(t) = φ⁻¹(ξ(t), u(t))`.
//!
//! Modules, bottom up:
//!
//! - [`expr`]: parse, evaluate and symbolically differentiate the scalar
//!   expressions that define `f̃`, `g̃ᵢ` and the cost `γ`.
//! - [`system`]: problem data, augmented fields, Lie brackets and the
//!   commutativity audit.
//! - [`transform`]: `φ`, `φ⁻¹`, `∇φ`, the transformed drift `F̃`, the
//!   flow-box audit and the `u₂`-transport.
//! - [`signals`]: pointwise-defined controls with jumps, mollification and
//!   Radon integrals against variation maps.
//! - [`propagate`]: direct and transformed integrators, the approximation
//!   and robustness experiments.
//! - [`adjoint`]: transformed adjoint, pull-back to the original costate
//!   and the lifted-field audit.
//! - [`certify`]: first- and second-order necessary conditions evaluated
//!   along a candidate, aggregated into a [`certify::CertificateReport`].
//! - [`io`] and [`cli`]: file formats and the `impulse` command line.

// `!(x <= tol)` is deliberate: NaN must fail every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::type_complexity, clippy::redundant_guards)]

pub mod adjoint;
pub mod certify;
pub mod cli;
pub mod error;
pub mod expr;
pub mod io;
mod ode;
pub mod propagate;
pub mod sampling;
pub mod signals;
pub mod system;
pub mod transform;

pub use error::{Error, Result};
pub use system::{SystemDocument, SystemSpec};
pub use transform::TransformContext;

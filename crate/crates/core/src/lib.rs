//! Neural-network approximation of stationary PDE solutions trained as a
//! nonlinear least-squares problem.
//!
//! The crate provides:
//!
//! - [`ann`]: a one-hidden-layer network with closed-form derivatives in the
//!   spatial input and in the parameters,
//! - [`pde`]: benchmark problems, training grids and the residual system
//!   `F(p)` whose half squared norm is the training loss,
//! - [`linsolve`]: truncated CGLS and a dense direct solver with matvec
//!   flop accounting,
//! - [`lm`]: the one-level Levenberg-Marquardt driver,
//! - [`amg`]: Ruge-Stuben coarsening of hidden-node triples and the
//!   resulting transfer operators,
//! - [`mlm`]: the two-level Levenberg-Marquardt driver,
//! - [`fdref`]: a finite-difference Helmholtz solver used as reference
//!   solution when no closed form is available.

pub mod amg;
pub mod ann;
pub mod error;
pub mod fdref;
pub mod linsolve;
pub mod lm;
pub mod mlm;
pub mod pde;
pub mod trace;

pub use error::{Error, Result};

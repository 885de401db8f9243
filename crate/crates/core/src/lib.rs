//! Fifth-order WENO finite-difference schemes for 1-D hyperbolic
//! conservation laws: the classical Jiang-Shu weights, the Z weights, and a
//! learned variant (WENO-DS) whose smoothness indicators are rescaled by the
//! output of a small convolutional network.
//!
//! The crate ships the full loop around the schemes:
//!
//! * [`mesh`], [`kernel`], [`flux`], [`euler`], [`integrate`] — the solvers:
//!   grids and ghost handling, the pointwise reconstruction kernel, scalar
//!   and Euler right-hand sides, TVD-RK3 drivers.
//! * [`autodiff`], [`diffstep`] — a reverse-mode tape over array-valued
//!   primitives and a tape-built replica of the DS time step, so a loss at
//!   the end of a step can be differentiated with respect to the network
//!   parameters.
//! * [`net`], [`training`] — the multiplier network, dataset generators,
//!   losses, Adam, and the per-step training cycle with validation-based
//!   model selection.
//! * [`riemann`], [`reference`] — exact shock-tube solutions and fine-grid
//!   reference runs with an on-disk cache.
//! * [`report`] — error norms, comparison tables and convergence orders used
//!   by the CLI.

pub mod autodiff;
pub mod diffstep;
pub mod error;
pub mod euler;
pub mod flux;
pub mod integrate;
pub mod kernel;
pub mod mesh;
pub mod net;
pub mod reference;
pub mod report;
pub mod riemann;
pub mod training;

pub use error::{Error, Result};

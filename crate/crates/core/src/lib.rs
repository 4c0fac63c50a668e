//! Interior point solver for linear semidefinite feasibility problems.
//!
//! The solver works on the homogeneous feasibility model of a primal-dual
//! SDP pair with zero cost. Starting from a dual strictly feasible warm
//! start it runs a predictor-corrector path following method with the dual
//! HKM direction, and the same iteration can be replayed on the equivalent
//! semidefinite linear complementarity problem.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod dense;
pub mod embed;
pub mod error;
pub mod ipm;
pub mod newton;
pub mod phase1;
pub mod problem;
pub mod sdlcp;
pub mod symcore;

pub use embed::{HPoint, Outcome, Residuals, Solution};
pub use error::*;
pub use ipm::{IterTrace, Params};
pub use problem::{Lmi, Lsdfp, Witness};
pub use sdlcp::{HatPoint, OrthBasis, SdlcpOps};
pub use symcore::{smat, svec, SVec, SymMat};

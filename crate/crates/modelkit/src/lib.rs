//! Operator toolkit for boundary-value problems on finite matrix
//! representations: M-functions (Dirichlet-to-Neumann maps), Krein
//! resolvents of boundary conditions, the dissipative operator and its
//! self-adjoint dilation, characteristic functions, and the two-component
//! functional model, each identity exposed as a numerically checkable
//! defect.

pub mod charfun;
pub mod dilation;
pub mod error;
pub mod hardy;
pub mod linalg;
pub mod quad;
pub mod extensions;
pub mod model;
pub mod par;
pub mod scenarios;
pub mod triple;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};

//! Numerical models of the Poisson–Lie deformed trigonometric BC_n
//! Sutherland system.
//!
//! The reduced phase space is reached in two ways: the local Darboux chart
//! `(p̂, q̂)` over the open Weyl chamber ([`local`]) and the global model
//! `ℂ^{n−1} × D` ([`global`]). Both produce points `K` of the Heisenberg
//! double on the constraint surface of the momentum map ([`momentum`]),
//! whose Lax matrix `L = b_R† b_R` yields the commuting Hamiltonians
//! ([`hamiltonians`]). [`dynamics`] integrates their flows and compares them
//! with the projection method, and [`verify`] certifies the construction
//! numerically.
//!
//! ```
//! use bcn_deform::{h_main, CouplingParams, LocalPoint, K_local, constraint_residual};
//!
//! let params = CouplingParams::new(2, 1.0, -0.3, 0.5)?;
//! let pt = LocalPoint::new(vec![-0.1, -0.9], vec![0.4, -1.2])?;
//! let k = K_local(&params, &pt)?;
//! assert!(constraint_residual(&k, &params) < 1e-10);
//! assert!(h_main(&params, &pt)?.is_finite());
//! # Ok::<(), bcn_deform::Error>(())
//! ```

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod global;
pub mod group;
pub mod hamiltonians;
pub mod linalg;
pub mod local;
pub mod momentum;
pub mod sampling;
pub mod verify;

pub use error::{Error, Result};
pub use global::K_global;
pub use group::GroupPoint;
pub use hamiltonians::{h_k, h_k_local, h_main, LaxMatrix};
pub use linalg::ToleranceProfile;
pub use local::{z_of_local, local_of_z, CouplingParams, GlobalPoint, LocalPoint, K_local};
pub use momentum::constraint_residual;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/coordinates.md")]
    mod coordinates {}
    #[doc = include_str!("../../../book/src/reduction.md")]
    mod reduction {}
    #[doc = include_str!("../../../book/src/hamiltonians.md")]
    mod hamiltonians {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/limits.md")]
    mod limits {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

//! Lagrangian boundary conditions, Maslov indices and eigenvalue solvers for
//! matrix Sturm-Liouville problems
//!
//! ```text
//! -(P x' + Q x)' + Q^T x' + R x = lambda D x   on [0, T]
//! ```
//!
//! Self-adjoint boundary conditions are Lagrangian subspaces of `C^{4n}`,
//! represented by frames in the basis `(-y(0), y(T), x(0), x(T))` where
//! `y = P x' + Q x`. The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

pub mod error;
pub mod experiments;
pub mod lagrangian;
pub mod linalg;
pub mod maslov;
pub mod sampling;
pub mod slp;

pub use error::{Error, Result};
pub use lagrangian::{CanonicalForm, LagrangianFrame, SymplecticMat, UnitaryRep};
pub use linalg::{CMat, RMat, C64};

/// Numerical tolerances shared by every solver.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tolerances {
    /// Singular-value threshold for rank and intersection decisions.
    pub rank: f64,
    /// Unitarity, isotropy and hermiticity defects.
    pub unit: f64,
    /// Relative symplectic defect of a monodromy matrix.
    pub symp: f64,
    /// Eigenangle snapping radius around multiples of `2 pi`.
    pub eig: f64,
    /// Relative accuracy of located eigenvalues.
    pub lambda: f64,
    /// Local tolerance of the Runge-Kutta integrator.
    pub integrator: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank: 1e-8,
            unit: 1e-10,
            symp: 1e-9,
            eig: 1e-8,
            lambda: 1e-10,
            integrator: 1e-10,
        }
    }
}

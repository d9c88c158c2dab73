//! Numerical workbench for p-harmonic boundary-value problems on exterior
//! domains.
//!
//! The crate solves `-div(|∇v|^{p-2}∇v) = 0` outside a circular (or, for
//! `d >= 3`, spherical) hole with Dirichlet, Neumann or Robin data on the
//! hole and a prescribed behaviour at infinity, and checks computed or
//! analytic fields against the energy inequalities, decay rates and the
//! constant-versus-fundamental-solution alternative that such solutions obey.
//!
//! Module map:
//!
//! * [`analytic`]: fundamental solution `μ_p`, radial profiles, Kelvin
//!   transform, closed-form constants.
//! * [`radial_bvp`]: exact radial solutions and an independent shooting oracle.
//! * [`discretization`]: annular meshes, radial grids, fields, quadrature.
//! * [`energy_solver`]: regularized p-Dirichlet energy minimization.
//! * [`verification`]: cutoff inequalities, decay fits, dichotomy classifier.
//! * [`cli`]: key-value configured experiment runner.

// `!(x > 0.0)` also rejects NaN, which the suggested rewrites would not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod discretization;
pub mod energy_solver;
mod error;
pub mod quadrature;
pub mod radial_bvp;
mod roots;
pub mod verification;

pub use error::{Error, Result};

/// `Φ(t) = |t|^{p-2} t`, the scalar p-Laplacian nonlinearity.
pub fn phi(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.abs().powf(p - 2.0) * t
    }
}

/// Inverse of [`phi`]: `sign(s) |s|^{1/(p-1)}`.
pub fn phi_inverse(s: f64, p: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.signum() * s.abs().powf(1.0 / (p - 1.0))
    }
}

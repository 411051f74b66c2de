//! Numerical toolkit for regularity theory of weakly singular, anisotropic and
//! possibly nonsymmetric nonlocal operators
//! `ℒu(x) = ∫ (u(x) − u(y)) K(x, y) dy`.
//!
//! The modules follow the pipeline kernel → conditions → growth constants →
//! modulus of continuity, with a 1D Galerkin solver and verification harnesses
//! that test the boundedness, growth and continuity statements on discrete data.

pub mod error;
pub mod kernel;
pub mod quadrature;
pub mod conditions;
pub mod growth;
pub mod continuity;
pub mod solver;
pub mod experiments;
pub mod svg;
pub mod cli;

pub use error::{Error, Result};

//! Compiler and simulator toolchain for surface-code communication.
//!
//! Logical circuits are parsed from a small line-oriented assembly format,
//! turned into a dependency DAG, placed onto a tiled grid and then executed
//! on two microarchitecture models:
//!
//! - [`braid`]: double-defect tiles talking through braids on a
//!   circuit-switched corner-router mesh, with priority policies 0 through 6.
//! - [`teleport`]: planar tiles in a Multi-SIMD region layout, moving data and
//!   magic states by teleportation with windowed EPR prefetch.
//!
//! [`estimator`] combines both with [`qec`] parameters into physical qubit and
//! wall-clock costs, locates planar/double-defect cross-over points and sweeps
//! favorability boundaries across physical error rates.

pub mod braid;
pub mod circuit;
pub mod config;
pub mod error;
pub mod estimator;
pub mod export;
pub mod layout;
pub mod qec;
pub mod teleport;

pub use error::{Error, Result};

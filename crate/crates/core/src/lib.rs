//! Long-range XY spin chains at infinite temperature: exact quantum dynamics
//! in fixed-magnetization sectors, product-state and typicality estimators of
//! the spin correlation function, the classical Lévy-flight hydrodynamics that
//! describes their late-time behaviour, and the fits that extract scaling
//! exponents and transport coefficients.
//!
//! The crate is `no_std` (with `alloc`); enable the `std` feature for faster
//! dense linear algebra.

#![cfg_attr(not(feature = "std"), no_std)]
// Negated comparisons reject NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

extern crate alloc;

pub mod analysis;
pub mod coupling;
pub mod error;
pub mod field;
pub mod hydro;
pub mod linalg;
pub mod optimize;
pub mod quad;
pub mod quantum;
pub mod sampling;

pub use coupling::{CouplingMatrix, IonChainSpec, PowerLawFit};
pub use error::{Error, Result};
pub use field::CorrelationField;

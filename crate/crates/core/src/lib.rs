//! Regularized multinomial coefficients over the full signed lattice and
//! numerical verification of bilateral binomial and multinomial expansions.
//!
//! The crate is organised bottom-up:
//!
//! - [`gamma`]: real Gamma, pole-order algebra for `h → 0⁺` limits,
//!   Pochhammer symbols and principal-branch complex powers.
//! - [`lattice`]: point values on the Pascal lattice, construction law,
//!   hyper-pyramid regions and layer tables.
//! - [`bilateral`]: the bilateral series `₁H₁` with truncation diagnostics and
//!   the bilateral binomial identity.
//! - [`multinomial`]: bilateral trinomial/multinomial sums, the nested
//!   reduction, the symmetric form and the unit-sum probe.
//! - [`cli`]: command-line front end.

pub mod bilateral;
pub mod cli;
pub mod gamma;
pub mod lattice;
pub mod multinomial;
pub mod summation;

mod serde_complex;

pub use num_complex::Complex64;

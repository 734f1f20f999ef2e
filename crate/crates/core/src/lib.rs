//! Radial Keller–Segel collapse in the accumulated-mass variable.
//!
//! For radial solutions of the parabolic–elliptic chemotaxis system on a ball
//! `B_R ⊂ ℝⁿ`, the mass function
//!
//! ```text
//! w(s, t) = ∫₀^{s^{1/n}} ρ^{n-1} u(ρ, t) dρ,     s ∈ (0, Rⁿ]
//! ```
//!
//! obeys the scalar degenerate equation
//!
//! ```text
//! w_t = n² s^{2-2/n} w_ss + n w w_s − μ s w_s,     w(Rⁿ, t) = m / ω_n.
//! ```
//!
//! A positive limit `w(0⁺, t)` is a Dirac mass `θ(t) = ω_n w(0⁺, t)` at the
//! origin. This crate approximates the minimal solution through slope-capped
//! regularizations, extracts `θ`, samples the closed-form barriers that force
//! or bound collapse, and reconstructs the measure `θ δ₀ + ρ dx`.
//!
//! ```
//! use kscollapse::model::ProblemParams;
//!
//! let p = ProblemParams::new(3, 1.0, 4.0 * std::f64::consts::PI).unwrap();
//! assert_eq!(p.mu(), 3.0);
//! assert_eq!(p.mass_cap(), 1.0);
//! ```
//!
//! The guide under `book/` walks through every module; its snippets are
//! compiled and run as doctests of this crate.

pub mod barriers;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod reconstruct;
pub mod solver;

pub use error::{Error, Result};

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/mass-function.md")]
    pub mod mass_function {}
    #[doc = include_str!("../../../book/src/regularization.md")]
    pub mod regularization {}
    #[doc = include_str!("../../../book/src/dirac-extraction.md")]
    pub mod dirac_extraction {}
    #[doc = include_str!("../../../book/src/barriers.md")]
    pub mod barriers {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    pub mod diagnostics {}
    #[doc = include_str!("../../../book/src/measure.md")]
    pub mod measure {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    pub mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}

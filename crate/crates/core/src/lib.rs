//! Spontaneous emission of a two-level atom inside a semi-infinite
//! rectangular waveguide.
//!
//! The crate is layered bottom-up:
//!
//! * [`model`] holds the guide geometry, TM-mode dispersion, coupling
//!   strengths and the list of resonant channels seen by the atom.
//! * [`markov`] evaluates the coupling spectrum and the Markovian decay
//!   rates (finite-time and golden-rule), plus the short-time perturbative
//!   amplitude.
//! * [`dde`] integrates the multi-delay delay-differential equation that
//!   follows from linearising the dispersion around the atomic frequency,
//!   and provides the closed-form series solutions used to check it.
//! * [`kspace`] is the brute-force reference: it evolves the atom together
//!   with a discretised photon continuum, without any linearisation.
//! * [`scenario`] resolves run configurations, dispatches to an engine and
//!   writes CSV traces with a reproducible manifest.
//!
//! All quantities are dimensionless: the speed of light and the guide
//! height default to one, and the dipole prefactor is a free constant.

pub mod dde;
pub mod error;
pub mod kspace;
pub mod markov;
pub mod model;
pub mod quadrature;
pub mod scenario;

pub use error::{Error, Result};
pub use num_complex::Complex64;

//! # heredlab
//!
//! Numerical tools for linear viscoelastic hereditary laws of the form
//!
//! ```text
//! σ(t) = ℂ ε(t) − ∫_{−∞}^{t} K(t − s) ε(s) ds
//! ```
//!
//! with relaxation kernels given as Prony series or generated by a
//! relaxation measure over decay rates.
//!
//! The crate is organised by task:
//!
//! * [`material`]: kernels, elastic moduli, fading-memory weights and the
//!   derived material functions (relaxation and complex moduli, operator norms).
//! * [`wellposed`]: contractivity (`γ`) and Hilbert-Schmidt constants of a
//!   kernel/weight pair, bundled into a [`wellposed::Certificate`].
//! * [`volterra`]: sampled evolutions and the local stress-control problem,
//!   solved by causal time stepping or by Picard iteration.
//! * [`history`]: the plastic-strain history operator on a finite history
//!   window, its singular system, optimal rank-N truncation, Laguerre history
//!   variables and analytic oracles for the standard linear solid.
//! * [`spectra`]: relaxation measures, kernel distances, Prony atomization of
//!   continuous spectra and bounding-class membership.
//! * [`cli`]: the `heredlab` command line front end.
//!
//! ```
//! use heredlab::material::{HereditaryLaw, PronyMode, ScalarKernel, Weight};
//! use heredlab::wellposed::certify;
//!
//! let kernel = ScalarKernel::prony(vec![PronyMode::new(1.0, 2.0).unwrap()]).unwrap();
//! let law = HereditaryLaw::scalar(1.0, kernel).unwrap();
//! let cert = certify(&law, Weight::constant()).unwrap();
//! assert!((cert.gamma - 0.5).abs() < 1e-14);
//! assert!(cert.contractive);
//! ```

pub mod cli;
pub mod error;
pub mod history;
pub mod linalg;
pub mod material;
pub mod output;
pub mod quadrature;
pub mod spectra;
pub mod volterra;
pub mod wellposed;

pub use error::{Error, Result};

//! Three-dimensional q-Normal distributions.
//!
//! The crate evaluates the q-Normal family and its three-dimensional
//! extension: q-Hermite, Al-Salam–Chihara and Rogers polynomials, joint,
//! marginal and conditional densities, closed-form moments, tensor
//! Gauss–Legendre quadrature over `S(q)^d`, and seeded samplers.
//!
//! ```
//! use qnormal3d::densities::{f_n, ModelParams, Model, MarginalForm};
//! use qnormal3d::qcore::TruncationConfig;
//!
//! let cfg = TruncationConfig::default();
//! // Semicircle law at q = 0.
//! let v = f_n(0.0, 0.0, &cfg).unwrap();
//! assert!((v - 1.0 / std::f64::consts::PI).abs() < 1e-15);
//!
//! let model = Model::new(ModelParams::new(0.3, 0.4, 0.5, 0.5).unwrap(), &cfg).unwrap();
//! let fz = model.f_z(0.7, MarginalForm::Rogers).unwrap();
//! assert!(fz > 0.0);
//! ```

// `!(a <= b)` is used on purpose so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod densities;
pub mod error;
pub mod moments;
pub mod polynomials;
pub mod qcore;
pub mod quadrature;
pub mod sampler;
pub mod verify;

pub use densities::{DensityForm, MarginalForm, Model, ModelParams};
pub use error::{Error, Result};
pub use qcore::{QParam, Support, TruncationConfig};

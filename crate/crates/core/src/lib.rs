//! Gradient flows of kernel mean discrepancies in one dimension.
//!
//! Two families of flows are simulated:
//!
//! * the Wasserstein gradient flow of the Riesz discrepancy
//!   `½‖μ − ν‖²_{Ḣ^{-s}}` on the unit torus, integrated with a
//!   finite-volume upwind scheme whose velocity is synthesized spectrally
//!   ([`flow1d`], built on [`spectral`] and [`densities`]);
//! * Wasserstein and Wasserstein–Fisher–Rao particle flows of the arccos
//!   (ReLU) kernel energy on the circle, i.e. mean-field training of a
//!   shallow ReLU network on the population loss ([`sphere_relu`]).
//!
//! [`diagnostics`] holds the observables that are checked against the
//! convergence theory: circle W₂, sublevel measures, dissipation residuals
//! and log-linear / log-log rate fits.

// `!(x > 0.0)` is used on purpose to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod densities;
pub mod diagnostics;
pub mod error;
pub mod flow1d;
pub mod series;
pub mod spectral;
pub mod sphere_relu;

pub use error::{Error, Result};
pub use series::{FlowTimeSeries, SampleRow};
pub use spectral::{DensityField, RieszParams, Spectrum, TorusGrid1D};

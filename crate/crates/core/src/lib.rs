//! Temporal ETAS (epidemic-type aftershock sequence) modelling.
//!
//! - [`catalog`]: (time, magnitude) catalogues, CSV ingestion, mainshock splits.
//! - [`model`]: triggering kernel, conditional intensity, magnitude law.
//! - [`likelihood`]: closed-form integrals, binned and linearized log-likelihood.
//! - [`priors`]: gamma/uniform priors linked to a standard-normal scale.
//! - [`inference`]: iterative linearize-and-maximise fit with a Gaussian
//!   posterior approximation at the mode.
//! - [`simulator`]: branching simulation of synthetic catalogues and ensembles.
//! - [`scoring`]: inter-event-time diagnostics, number test and CRPS.
//! - [`cli`]: the `etas-lab` command implementations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod inference;
pub mod likelihood;
pub mod model;
pub mod priors;
pub mod scoring;
pub mod simulator;
pub mod util;

pub use catalog::{Catalog, CatalogSplit, Event};
pub use error::{Error, Result};
pub use likelihood::BinningConfig;
pub use model::{EtasParameters, MagnitudeLaw, Param};
pub use priors::{FixMode, LinkedPrior, PriorSet, PriorSpec};

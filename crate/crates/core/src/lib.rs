//! Coverage and throughput of rateless versus fixed-rate PHY-layer coding in a
//! Poisson cellular downlink.
//!
//! * [`specfun`]: the Gauss hypergeometric kernels behind every closed form.
//! * [`analytics`]: CCDF bounds, success probabilities, rates and gains.
//! * [`geometry`]: PPP realizations on a wrap-around window.
//! * [`netsim`]: the slot-level interference and decoding engine.
//! * [`metrics`]: estimators, gamma fits, per-user reports, curve comparison.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod netsim;
pub mod rng;
pub mod specfun;

pub use error::{Error, NumericError, Result};

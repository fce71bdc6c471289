//! Certified secret-key rates for four-state discrete-modulated continuous-variable
//! QKD with heterodyne detection.
//!
//! The pipeline builds truncated Fock-space operators ([`fock`]), the honest channel
//! statistics ([`honest`]), minimizes the key-rate relative entropy by Frank-Wolfe
//! with an interior-point SDP engine ([`convex`], [`sdp`]), and turns the resulting
//! dual certificate into asymptotic and finite-size rates ([`tradeoff`], [`finite`]).

pub mod error;
pub mod fock;
pub mod honest;
pub mod convex;
pub mod linalg;
pub mod pipeline;
pub mod finite;
pub mod sdp;
pub mod special;
pub mod tradeoff;

pub use error::{Error, Result};

//! Neural implicit k-space reconstruction for dynamic radial MRI with a
//! subset self-consistency regularizer on k-space neighborhood weights.
//!
//! The numerical core ([`numcore`], [`nik`], [`pisco`], [`trainer`]) is
//! generic over [`Real`]; the aliases below fix it to `f64`, which the
//! simulation and evaluation pipeline uses throughout.

pub mod error;
pub mod fft;
pub mod grappa;
pub mod image;
pub mod kspace;
pub mod neighborhood;
pub mod nik;
pub mod numcore;
pub mod phantom;
pub mod pisco;
pub mod recon;
pub mod scalar;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Tensor = numcore::RealTensor<f64>;
pub type Tape64 = numcore::Tape<f64>;
pub type CMatrix = numcore::ComplexMatrix<f64>;
pub type Siren = nik::SirenModel<f64>;
pub type Siren32 = nik::SirenModel<f32>;
pub type Weights = pisco::WeightSet<f64>;

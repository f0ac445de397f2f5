//! Numerical and logical toolkit for inequality-free nonlocality arguments
//! on small spin-1/2 systems.
//!
//! The linear-algebra layers ([`tensor`], [`spin`], [`correlation`]) are
//! generic over the real scalar ([`Real`], i.e. `f32` or `f64`). The
//! experiment layers ([`hardy`], [`chains`], [`reality`]) work in `f64` and use
//! the aliases exported here.

pub mod chains;
pub mod correlation;
pub mod error;
pub mod hardy;
pub mod optimize;
pub mod random;
pub mod reality;
pub mod scalar;
pub mod spin;
pub mod tensor;

pub use error::{LabError, Result};
pub use scalar::Real;

pub type Complex64 = num_complex::Complex<f64>;

pub type CVector = tensor::Vector<f64>;
pub type CMatrix = tensor::Matrix<f64>;
pub type Direction = spin::Direction<f64>;
pub type Projector = spin::Projector<f64>;
pub type LocalObservable = spin::LocalObservable<f64>;
pub type StateVector = correlation::StateVector<f64>;
pub type Correlation = correlation::Correlation<f64>;

pub type CVector32 = tensor::Vector<f32>;
pub type CMatrix32 = tensor::Matrix<f32>;
pub type Direction32 = spin::Direction<f32>;
pub type Projector32 = spin::Projector<f32>;
pub type LocalObservable32 = spin::LocalObservable<f32>;
pub type StateVector32 = correlation::StateVector<f32>;
pub type Correlation32 = correlation::Correlation<f32>;

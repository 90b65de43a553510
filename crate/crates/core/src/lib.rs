//! Algebraic inequalities, pinching thresholds, exact solutions and a
//! rotationally symmetric mean curvature flow simulator for ancient
//! solutions in space forms.

pub mod error;
pub mod exact;
pub mod flow;
pub mod functionals;
pub mod linalg;
pub mod pinching;
pub mod scalar;
pub mod tensor;

use num_rational::Ratio;

pub use error::{Error, Result};
pub use exact::{SpaceForm, UmbilicalSolution};
pub use linalg::Mat;
pub use scalar::Real;
pub use tensor::FundamentalForm;

/// Converts an exact constant to the working scalar.
pub fn ratio_to<T: Real>(r: Ratio<i64>) -> T {
    T::lit(*r.numer() as f64 / *r.denom() as f64)
}

pub type FundamentalForm64 = tensor::FundamentalForm<f64>;
pub type FundamentalForm32 = tensor::FundamentalForm<f32>;
pub type Mat64 = linalg::Mat<f64>;
pub type GParams64 = pinching::GParams<f64>;
pub type PhiParams64 = pinching::PhiParams<f64>;
pub type UmbilicalSolution64 = exact::UmbilicalSolution<f64>;
pub type FlowState64 = flow::FlowState<f64>;
pub type CurvatureFields64 = flow::CurvatureFields<f64>;
pub type RunConfig64 = flow::RunConfig<f64>;
pub type FunctionalRecord64 = functionals::FunctionalRecord<f64>;

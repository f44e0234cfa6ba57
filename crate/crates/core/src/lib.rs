//! Impulse-invariant discretization of separable and bilinear Volterra kernels.
//!
//! Continuous-time kernels of the form `H^(p)(τ_p)···H^(1)(τ_1)` are sampled
//! with the multiplicity-corrected invariance rule and realized either by
//! brute-force kernel sums ([`oracle`]), by the plain cascade of linear blocks
//! and input multipliers ([`cascade::naive_cascade`]), or by the corrected
//! cascade ([`cascade::corrected_cascade`]) which reproduces the sampled
//! output `y_p(n) = y_{c,p}(nT)` of the continuous system driven by an
//! impulse train. [`system`] provides the exact continuous-time reference and
//! [`complexity`] the closed-form multiplication counts.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the double-precision instances used by the CLI and the
//! acceptance suite.

pub mod cascade;
pub mod complexity;
mod error;
pub mod invariance;
pub mod matexp;
pub mod oracle;
mod scalar;
pub mod system;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use cascade::{DiscreteFactor, OpCounter};
pub use complexity::{ComplexityProfile, Convention};
pub use invariance::{IndexConvention, KernelIndex, MultiplicityFactor};
pub use matexp::{Matrix, Vector};
pub use system::{BilinearSystem, FactorChain, LtiFactor, Signal};

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type Vector64 = Vector<f64>;
pub type Signal64 = Signal<f64>;
pub type Signal32 = Signal<f32>;
pub type LtiFactor64 = LtiFactor<f64>;
pub type FactorChain64 = FactorChain<f64>;
pub type FactorChain32 = FactorChain<f32>;
pub type BilinearSystem64 = BilinearSystem<f64>;
pub type BilinearSystem32 = BilinearSystem<f32>;
pub type DiscreteFactor64 = DiscreteFactor<f64>;

//! Dyadic cubes, Haar-type wavelets and inhomogeneous Lipschitz/Carleson
//! norms on finite quasi-metric measure spaces.
//!
//! The pipeline is
//! [`generate`](generate::generate) or [`io`] →
//! [`validate_space`](space::validate_space) →
//! [`build_tree`](dyadic::build_tree) →
//! [`build_mra`](wavelet::build_mra) →
//! [`analyze`](wavelet::analyze) → [`norms`].
//!
//! All reductions go through [`sum::ExactSum`], so every reported number is
//! independent of thread count and iteration order.

pub mod doubling;
pub mod dyadic;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod geometry;
pub mod io;
pub mod norms;
pub mod par;
pub mod space;
pub mod wavelet;
pub mod sum;

pub use error::{Error, Result};
pub use space::FiniteHomSpace;

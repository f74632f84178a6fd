//! Lipschitz, Carleson, Hölder and test-function norms.

pub mod bounds;
pub mod carleson;
pub mod kernels;
pub mod lip;

pub use bounds::{check_multiplier_bound, check_pairing_bound, check_pointwise_bounds, BoundRatio, PointwiseReport};
pub use carleson::{carleson_norm, CarlesonNorm};
pub use kernels::{holder_norm, kernel_p, test_function_norm, ExpKernel, TestFunctionNorm, TestFunctionType};
pub use lip::{ball_functional, lip_norm, Branch, LipNorm, LipWitness};

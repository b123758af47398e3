//! Dense f64 tensors with reverse-mode autodiff.
//!
//! Built for small convolutional GANs trained on the CPU. Gradients can be
//! taken through gradients, which WGAN-GP training needs. Kernels run on the
//! calling thread with a fixed summation order, so the same inputs always give
//! bit-identical outputs.

mod grad;
mod kernels;
mod param;
pub mod shape;
mod tensor;

pub use grad::{grad, grad_with_seed};
pub use param::{Adam, AdamConfig, Bound, Param, ParamId, ParamStore};
pub use tensor::{is_grad_enabled, no_grad, with_grad_mode, Tensor};

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Dense tensors with reverse-mode automatic differentiation.
//!
//! Values live on a [`Tape`]; each primitive records its operands so that
//! [`Tape::backward`] can replay the chain rule in reverse order. Gradients of
//! intermediate values are kept only when asked for with
//! [`Tape::retain_grad`], which is how attribution reads `dL/dz` at interior
//! read points of the transformer.

mod gemm;
mod tape;
mod tensor;

pub(crate) use gemm::gemm;
pub use tape::{gelu, Tape, Var};
pub(crate) use tape::softmax_in_place;
pub use tensor::Tensor;

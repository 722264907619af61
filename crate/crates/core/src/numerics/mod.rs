//! Dense matrices, masks, masked reductions and a reverse-mode tape.

mod grad_check;
mod mask;
mod matrix;
pub mod ops;
mod params;
mod tape;

pub use grad_check::{grad_check, GradCheckReport};
pub use mask::Mask;
pub use matrix::Matrix;
pub use ops::{masked_max_pool, masked_softmax, mean_pool_rows, MASK_FILL};
pub use params::{Gradients, ParamId, ParamStore};
pub use tape::{Tape, Var};

pub(crate) use matrix::dot_wide;

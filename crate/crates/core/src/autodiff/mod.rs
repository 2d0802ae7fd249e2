//! Minimal reverse-mode compute core: exactly the operations the prior
//! network needs, with gradients checked against finite differences.

mod adam;
mod init;
mod param;
mod tape;

pub use adam::{adam_step, AdamState};
pub use init::{add_conv_layer, add_norm_layer, gaussian_kernel, kernel_std};
pub use param::{Param, ParamId, ParamSet, ParamShape};
pub use tape::{LossKind, NodeId, PadMode, Tape};

//! Neural CKM inference: PLE encoding, Transformer encoder, LPS-Net and
//! SE-Net forward passes, training losses, and the NCKM weights container.

mod encoder;
mod loss;
mod lps;
mod ple;
mod se;
mod weights;

pub use encoder::{encoder_forward, gelu, Encoder, LN_EPS};
pub use loss::{lps_loss, se_loss, smooth_l1, LpsLoss, LpsLossParams};
pub use lps::{lps_forward, LpsNet, LpsOutput};
pub use ple::{check_edges, ple_encode};
pub use se::{canonical_order, se_forward, SeNet};
pub use weights::{
    required_tensors, Dims, Init, ModelKind, Tensor, WeightStore, LPS_HEADS, LPS_TARGETS, MAGIC,
    VERSION,
};

//! On-disk formats: puzzle bundles, model checkpoints, score tensors, and
//! placements.

mod bundle;
mod checkpoint;
mod cmt;
mod placement;

pub use bundle::{load_bundle, save_bundle};
pub use checkpoint::{
    load_checkpoint, load_pair_checkpoint, save_checkpoint, save_pair_checkpoint, CheckpointKind,
    peek_checkpoint_kind,
};
pub use cmt::{load_cm_tensor, save_cm_tensor};
pub use placement::{load_placement, save_placement};

//! Neural implicit k-space representation: coordinate encoding, the SIREN
//! network and the data-consistency loss.

mod checkpoint;
mod encoding;
mod loss;
mod siren;

pub use checkpoint::{load_checkpoint, save_checkpoint, LayerEntry, Manifest, MANIFEST_FILE};
pub use encoding::FeatureEncoding;
pub use loss::{dc_loss, dc_loss_tape, DcLossConfig, SMOOTH_ABS_EPS};
pub use siren::{SirenConfig, SirenModel};

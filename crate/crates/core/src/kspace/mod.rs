//! k-space geometry and physics: radial trajectories, the exact NUDFT,
//! acquisition simulation, acceleration, motion binning and array files.

mod acquisition;
mod nda;
mod nudft;
mod trajectory;

pub use acquisition::{accelerate, bin_by_navigator, motion_state, simulate_acquisition, KSampleSet};
pub use nda::{read_nda, write_nda, NdArray, NdData};
pub use nudft::{nudft_adjoint, nudft_forward, nudft_forward_multi};
pub use trajectory::{golden_angle, golden_angle_radial, Trajectory};

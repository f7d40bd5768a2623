//! Frame-level acoustic features: f0, mel-cepstral energy and tilt, the
//! normalised conditioning payload fed to the decoder, and Lombard-vs-neutral
//! contrast statistics.

mod conditioning;
mod contrast;
mod dump;
mod f0;
mod mgc;

pub use conditioning::{
    extract_conditioning, interpolate_log_f0, AcousticFrameFeatures, GlobalMgcStats, SpeakerF0Stats,
    FEATURE_CHANNELS,
};
pub use contrast::{lombard_contrast, lombard_contrast_waveforms, FeatureMoments, LombardStats, StyleMoments};
pub use dump::{read_features, write_features};
pub use f0::{estimate_f0, F0Config, F0Track};
pub(crate) use mgc::cepstral_smooth;
pub use mgc::{mgc_from_spectrum, MgcConfig, MgcTrack};

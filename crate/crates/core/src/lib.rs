//! Rate regions for sharing uplink radio resources among eMBB, URLLC and
//! mMTC traffic, with orthogonal (H-OMA) and non-orthogonal (H-NOMA)
//! slicing.
//!
//! All gains and SNRs are linear; dB conversion happens only in
//! [`config`].

pub mod config;
pub mod embb;
pub mod embb_mmtc;
pub mod embb_urllc;
pub mod error;
pub mod mc;
pub mod mmtc;
pub mod region;
pub mod search;
pub mod special;
pub mod stats;
pub mod urllc;

pub use config::{parse_config, ScenarioConfig};
pub use embb::EmbbPolicy;
pub use error::{Error, Result};
pub use mc::McPlan;
pub use mmtc::TrialOutcome;
pub use region::{RegionCurve, RegionPoint, Scheme};
pub use search::SearchBracket;

//! Headless engine for event annotation of video.
//!
//! Times are integer microseconds on a shared timeline ([`TimePoint`]) and
//! frame rates are exact rationals ([`FrameRate`]). Every operation on a
//! [`Dataset`] is a pure function returning a new value; [`Session`] wires
//! them to keymap actions, and [`replay::replay_script`] drives a session from
//! a recorded interaction script.

pub mod annotator;
pub mod error;
pub mod history;
pub mod keymap;
pub mod lanes;
pub mod model;
pub mod persistence;
pub mod query;
pub mod replay;
pub mod server;
pub mod session;
pub mod transport;

pub use annotator::{
    apply_batch, apply_edit, fine_tune, reaction_compensate, Edge, Edit, LabelDraft, ReactionConfig,
};
pub use error::{Error, Result};
pub use history::History;
pub use keymap::{load_config, save_config, Action, Chord, Config, Keymap};
pub use lanes::{assign_lanes, assign_track_lanes, max_overlap_depth, pack_lanes, LaneAssignment};
pub use model::{
    frame_step, snap_to_frame, validate_dataset, Dataset, FrameRate, Label, LabelType, Project,
    TimePoint, Track, VideoSource,
};
pub use replay::{replay_on, replay_script, InteractionScript, ReplayOutcome};
pub use session::{Session, SessionEvent};
pub use transport::{Rate, RatePresets, TransportState};

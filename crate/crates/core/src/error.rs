use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can report.
///
/// Each variant maps to a stable, snake_case [`Error::code`] that is shared by
/// the HTTP API, the CLI and the C ABI.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("label `{0}` not found")]
    LabelNotFound(String),
    #[error("track `{0}` not found")]
    TrackNotFound(String),
    #[error("label type `{0}` not found")]
    TypeNotFound(String),
    #[error("invalid interval [{start}, {end}] (duration {duration})")]
    InvalidInterval { start: u64, end: u64, duration: u64 },
    #[error("label id `{0}` already exists")]
    DuplicateLabelId(String),
    #[error("invalid label: {0}")]
    InvalidLabel(String),
    #[error("no active track or label type")]
    NoActiveTrack,
    #[error("invalid playback rate {0}")]
    InvalidRate(String),
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("nothing to redo")]
    NothingToRedo,
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("unsupported format version `{0}`")]
    UnsupportedVersion(String),
    #[error("dataset failed validation: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("malformed config: {0}")]
    MalformedConfig(String),
    #[error("chord `{chord}` bound to both `{first}` and `{second}`")]
    DuplicateBinding {
        chord: String,
        first: String,
        second: String,
    },
    #[error("invalid frame rate {num}/{den}")]
    InvalidFrameRate { num: u32, den: u32 },
    #[error("invalid project: {0}")]
    InvalidProject(String),
    #[error("script line {line}: {message}")]
    ScriptSyntax { line: usize, message: String },
    #[error("script step {step}: {source}")]
    ScriptStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("unbound chord `{0}`")]
    UnboundChord(String),
    #[error("unresolvable target {0}")]
    UnresolvableTarget(String),
}

impl Error {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Error::LabelNotFound(_) => "label_not_found",
            Error::TrackNotFound(_) => "track_not_found",
            Error::TypeNotFound(_) => "type_not_found",
            Error::InvalidInterval { .. } => "invalid_interval",
            Error::DuplicateLabelId(_) => "duplicate_label_id",
            Error::InvalidLabel(_) => "invalid_label",
            Error::NoActiveTrack => "no_active_track",
            Error::InvalidRate(_) => "invalid_rate",
            Error::NothingToUndo => "nothing_to_undo",
            Error::NothingToRedo => "nothing_to_redo",
            Error::MalformedDocument(_) => "malformed_document",
            Error::UnsupportedVersion(_) => "unsupported_version",
            Error::Invalid(v) => v.first().map_or("invalid_dataset", |v| v.rule),
            Error::MalformedConfig(_) => "malformed_config",
            Error::DuplicateBinding { .. } => "duplicate_binding",
            Error::InvalidFrameRate { .. } => "invalid_frame_rate",
            Error::InvalidProject(_) => "invalid_project",
            Error::ScriptSyntax { .. } => "script_syntax",
            Error::ScriptStep { source, .. } => source.code(),
            Error::UnboundChord(_) => "unbound_chord",
            Error::UnresolvableTarget(_) => "unresolvable_target",
        }
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| format!("{} ({})", v.entity_id, v.rule))
        .collect::<Vec<_>>()
        .join(", ")
}

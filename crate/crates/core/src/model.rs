//! Domain vocabulary: timeline positions, frame rates, sources, labels and
//! the dataset that owns them.
//!
//! All stored times are integer microseconds on a timeline shared by every
//! camera of a project. Frame rates are reduced rationals so that NTSC rates
//! such as 30000/1001 convert without drift.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version tag written into every native dataset document.
pub const FORMAT_VERSION: &str = "feva/1";

const MICROS_PER_SEC: u128 = 1_000_000;

/// A position on the shared timeline, in microseconds from zero.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct TimePoint(pub u64);

impl TimePoint {
    pub const ZERO: TimePoint = TimePoint(0);

    pub const fn from_micros(micros: u64) -> Self {
        TimePoint(micros)
    }

    pub const fn from_millis(millis: u64) -> Self {
        TimePoint(millis * 1_000)
    }

    pub const fn from_secs(secs: u64) -> Self {
        TimePoint(secs * 1_000_000)
    }

    pub const fn micros(self) -> u64 {
        self.0
    }

    /// `self + delta`, clamped to `[0, max]`.
    pub fn offset_clamped(self, delta: i64, max: TimePoint) -> TimePoint {
        let t = (self.0 as i128 + delta as i128).clamp(0, max.0 as i128);
        TimePoint(t as u64)
    }

    pub fn min(self, other: TimePoint) -> TimePoint {
        TimePoint(self.0.min(other.0))
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}µs", self.0)
    }
}

/// Frames per second as a reduced fraction `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawFrameRate")]
pub struct FrameRate {
    num: u32,
    den: u32,
}

#[derive(Deserialize)]
struct RawFrameRate {
    num: u32,
    den: u32,
}

impl TryFrom<RawFrameRate> for FrameRate {
    type Error = Error;

    fn try_from(raw: RawFrameRate) -> Result<Self> {
        FrameRate::new(raw.num, raw.den)
    }
}

impl FrameRate {
    /// Builds a rate in canonical (gcd-reduced) form.
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidFrameRate { num, den });
        }
        let g = gcd(num as u64, den as u64) as u32;
        Ok(FrameRate {
            num: num / g,
            den: den / g,
        })
    }

    pub fn integer(fps: u32) -> Result<Self> {
        FrameRate::new(fps, 1)
    }

    pub fn num(self) -> u32 {
        self.num
    }

    pub fn den(self) -> u32 {
        self.den
    }

    /// Start time of frame `index`, rounded half away from zero to the microsecond.
    pub fn frame_to_time(self, index: u64) -> TimePoint {
        let numer = index as u128 * self.den as u128 * MICROS_PER_SEC;
        TimePoint(div_round(numer, self.num as u128) as u64)
    }

    /// Index of the frame whose start is nearest to `t`.
    pub fn frame_index(self, t: TimePoint) -> u64 {
        let numer = t.0 as u128 * self.num as u128;
        div_round(numer, self.den as u128 * MICROS_PER_SEC) as u64
    }

    /// Nominal frame duration, rounded to the microsecond.
    pub fn frame_duration(self) -> u64 {
        div_round(self.den as u128 * MICROS_PER_SEC, self.num as u128) as u64
    }
}

impl fmt::Display for FrameRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Non-negative division rounded half away from zero.
fn div_round(numer: u128, denom: u128) -> u128 {
    (2 * numer + denom) / (2 * denom)
}

/// Moves `t` onto the nearest frame boundary.
pub fn snap_to_frame(t: TimePoint, fps: FrameRate) -> TimePoint {
    fps.frame_to_time(fps.frame_index(t))
}

/// Steps `delta_frames` frames from the frame nearest to `t`, clamped to `[0, duration]`.
pub fn frame_step(
    t: TimePoint,
    fps: FrameRate,
    delta_frames: i64,
    duration: TimePoint,
) -> TimePoint {
    let index = fps.frame_index(t) as i128 + delta_frames as i128;
    let index = index.max(0) as u64;
    fps.frame_to_time(index).min(duration)
}

/// One camera or media file of a project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoSource {
    pub id: String,
    pub uri: String,
    pub fps: FrameRate,
    pub duration: TimePoint,
    /// Shift of this source relative to the shared timeline, in microseconds.
    #[serde(default)]
    pub offset: i64,
    #[serde(default)]
    pub width: u32,
    #[serde(default)]
    pub height: u32,
}

impl VideoSource {
    /// Maps a timeline position into this source's own clock.
    pub fn local_time(&self, t: TimePoint) -> TimePoint {
        let local = (t.0 as i128 - self.offset as i128).clamp(0, self.duration.0 as i128);
        TimePoint(local as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelType {
    pub id: String,
    pub name: String,
    pub color: String,
}

/// Optional spatial annotation carried by a label, normalized to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", content = "coords", rename_all = "lowercase")]
pub enum SpatialPayload {
    #[default]
    None,
    Point(f64, f64),
    Bbox(f64, f64, f64, f64),
}

impl SpatialPayload {
    pub fn is_none(&self) -> bool {
        matches!(self, SpatialPayload::None)
    }

    pub fn is_valid(&self) -> bool {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        match *self {
            SpatialPayload::None => true,
            SpatialPayload::Point(x, y) => unit(x) && unit(y),
            SpatialPayload::Bbox(x, y, w, h) => {
                [x, y, w, h].into_iter().all(unit) && x + w <= 1.0 && y + h <= 1.0
            }
        }
    }
}

/// Free-form label attribute, e.g. a rating on a fixed scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Number(n) => write!(f, "{n}"),
            AttrValue::Text(s) => f.write_str(s),
        }
    }
}

/// Unknown document fields, preserved verbatim across load/save.
pub type Extra = BTreeMap<String, serde_json::Value>;

/// One temporal event on a track.
///
/// `start == end` is a point (binary) label. For overlap purposes the
/// interval is half-open, so a point label overlaps nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Label {
    pub id: String,
    pub track_id: String,
    pub type_id: String,
    pub start: TimePoint,
    pub end: TimePoint,
    #[serde(default)]
    pub text: String,
    #[serde(default, skip_serializing_if = "SpatialPayload::is_none")]
    pub spatial: SpatialPayload,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, AttrValue>,
    #[serde(flatten)]
    pub extra: Extra,
}

impl Label {
    pub fn new(
        id: impl Into<String>,
        track_id: impl Into<String>,
        type_id: impl Into<String>,
        start: TimePoint,
        end: TimePoint,
    ) -> Self {
        Label {
            id: id.into(),
            track_id: track_id.into(),
            type_id: type_id.into(),
            start,
            end,
            text: String::new(),
            spatial: SpatialPayload::None,
            attributes: BTreeMap::new(),
            extra: Extra::new(),
        }
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = text.into();
        self
    }

    pub fn is_point(&self) -> bool {
        self.start == self.end
    }

    pub fn duration(&self) -> u64 {
        self.end.0.saturating_sub(self.start.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Track {
    pub id: String,
    pub name: String,
    #[serde(default = "default_true")]
    pub visible: bool,
}

fn default_true() -> bool {
    true
}

impl Track {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        Track {
            id: id.into(),
            name: name.into(),
            visible: true,
        }
    }
}

/// A project's complete annotation state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub version: String,
    pub revision: u64,
    pub tracks: Vec<Track>,
    pub types: Vec<LabelType>,
    pub labels: Vec<Label>,
    #[serde(flatten)]
    pub extra: Extra,
}

impl Default for Dataset {
    fn default() -> Self {
        Dataset::empty()
    }
}

impl Dataset {
    pub fn empty() -> Self {
        Dataset {
            version: FORMAT_VERSION.to_string(),
            revision: 0,
            tracks: Vec::new(),
            types: Vec::new(),
            labels: Vec::new(),
            extra: Extra::new(),
        }
    }

    /// The dataset a fresh project starts with: one track and one label type.
    pub fn with_defaults() -> Self {
        Dataset {
            tracks: vec![Track::new("track-1", "Track 1")],
            types: vec![LabelType {
                id: "event".into(),
                name: "Event".into(),
                color: "#e53935".into(),
            }],
            ..Dataset::empty()
        }
    }

    pub fn label(&self, id: &str) -> Option<&Label> {
        self.labels.iter().find(|l| l.id == id)
    }

    pub fn label_position(&self, id: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.id == id)
    }

    pub fn track(&self, id: &str) -> Option<&Track> {
        self.tracks.iter().find(|t| t.id == id)
    }

    pub fn label_type(&self, id: &str) -> Option<&LabelType> {
        self.types.iter().find(|t| t.id == id)
    }

    /// Next free identifier of the form `L<n>`.
    pub fn next_label_id(&self) -> String {
        let max = self
            .labels
            .iter()
            .filter_map(|l| l.id.strip_prefix('L')?.parse::<u64>().ok())
            .max()
            .unwrap_or(0);
        format!("L{}", max + 1)
    }
}

/// One broken invariant, located by entity id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub entity_id: String,
    pub rule: &'static str,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, entity_id: &str, rule: &'static str) {
        self.violations.push(Violation {
            entity_id: entity_id.to_string(),
            rule,
        });
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(self.violations))
        }
    }
}

/// Checks every dataset, track, type and label invariant.
pub fn validate_dataset(d: &Dataset) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut track_ids = HashSet::new();
    for t in &d.tracks {
        if t.id.is_empty() {
            report.push(&t.id, "track_id_nonempty");
        }
        if !track_ids.insert(t.id.as_str()) {
            report.push(&t.id, "unique_track_id");
        }
    }

    let mut type_ids = HashSet::new();
    for t in &d.types {
        if t.id.is_empty() {
            report.push(&t.id, "type_id_nonempty");
        }
        if !type_ids.insert(t.id.as_str()) {
            report.push(&t.id, "unique_type_id");
        }
        if t.name.trim().is_empty() {
            report.push(&t.id, "type_name_nonempty");
        }
        if !is_hex_color(&t.color) {
            report.push(&t.id, "type_color_hex");
        }
    }

    let mut label_ids = HashSet::new();
    for l in &d.labels {
        if l.id.is_empty() {
            report.push(&l.id, "label_id_nonempty");
        }
        if !label_ids.insert(l.id.as_str()) {
            report.push(&l.id, "unique_label_id");
        }
        if l.start > l.end {
            report.push(&l.id, "start_le_end");
        }
        if !track_ids.contains(l.track_id.as_str()) {
            report.push(&l.id, "track_exists");
        }
        if !type_ids.contains(l.type_id.as_str()) {
            report.push(&l.id, "type_exists");
        }
        if !l.spatial.is_valid() {
            report.push(&l.id, "spatial_in_range");
        }
        if l.attributes
            .values()
            .any(|v| matches!(v, AttrValue::Number(n) if !n.is_finite()))
        {
            report.push(&l.id, "attribute_finite");
        }
    }
    report
}

/// Like [`validate_dataset`], additionally requiring every label to end by `duration`.
pub fn validate_dataset_within(d: &Dataset, duration: TimePoint) -> ValidationReport {
    let mut report = validate_dataset(d);
    for l in d.labels.iter().filter(|l| l.end > duration) {
        report.push(&l.id, "within_duration");
    }
    report
}

fn is_hex_color(s: &str) -> bool {
    s.len() == 7 && s.starts_with('#') && s[1..].chars().all(|c| c.is_ascii_hexdigit())
}

/// A video plus the datasets annotating it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub id: String,
    pub name: String,
    pub sources: Vec<VideoSource>,
    pub primary_source_id: String,
    #[serde(default)]
    pub dataset_refs: Vec<String>,
}

impl Project {
    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::InvalidProject("project has no sources".into()));
        }
        let mut ids = HashSet::new();
        for s in &self.sources {
            if !ids.insert(s.id.as_str()) {
                return Err(Error::InvalidProject(format!(
                    "duplicate source id `{}`",
                    s.id
                )));
            }
            if s.duration.0 == 0 {
                return Err(Error::InvalidProject(format!(
                    "source `{}` has zero duration",
                    s.id
                )));
            }
        }
        if !ids.contains(self.primary_source_id.as_str()) {
            return Err(Error::InvalidProject(format!(
                "primary source `{}` is not a project source",
                self.primary_source_id
            )));
        }
        Ok(())
    }

    pub fn source(&self, id: &str) -> Option<&VideoSource> {
        self.sources.iter().find(|s| s.id == id)
    }

    /// The source whose clock drives the transport.
    ///
    /// Panics if the project was not validated.
    pub fn primary_source(&self) -> &VideoSource {
        self.source(&self.primary_source_id)
            .expect("validated project has its primary source")
    }
}

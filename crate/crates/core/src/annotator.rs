//! Label mutations.
//!
//! Speed labeling turns two presses of the mark key into one label, pulling
//! each press back by the annotator's reaction time. Every other change goes
//! through [`Edit`], and [`apply_edit`] hands back the exact inverse so the
//! history can undo it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    frame_step, snap_to_frame, AttrValue, Dataset, Extra, FrameRate, Label, SpatialPayload,
    TimePoint,
};
use crate::transport::TransportState;

/// Upper bound accepted for the reaction delay.
pub const MAX_DELTA_R: u64 = 2_000_000;

/// How press times are corrected for human reaction lag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReactionConfig {
    /// Reaction delay in wall-clock microseconds.
    pub delta_r: u64,
    pub compensate_only_while_playing: bool,
    /// Convert the wall-clock delay to media time using the playback rate.
    pub scale_by_rate: bool,
    pub snap_marks_to_frame: bool,
}

impl Default for ReactionConfig {
    fn default() -> Self {
        ReactionConfig {
            delta_r: 250_000,
            compensate_only_while_playing: true,
            scale_by_rate: true,
            snap_marks_to_frame: false,
        }
    }
}

impl ReactionConfig {
    pub fn with_delta_r(delta_r: u64) -> Self {
        ReactionConfig {
            delta_r,
            ..ReactionConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta_r > MAX_DELTA_R {
            return Err(Error::MalformedConfig(format!(
                "reaction.delta_r {} exceeds {MAX_DELTA_R}",
                self.delta_r
            )));
        }
        Ok(())
    }
}

/// Recovers the intended time of a key press made at `t_press`.
///
/// The playhead kept moving for `delta_r` of wall time before the press
/// landed, so the intended position is one reaction delay back along the
/// direction of playback.
pub fn reaction_compensate(
    t_press: TimePoint,
    cfg: &ReactionConfig,
    transport: &TransportState,
) -> TimePoint {
    if !transport.playing() && cfg.compensate_only_while_playing {
        return t_press;
    }
    let rate = transport.rate();
    let lag = if cfg.scale_by_rate {
        rate.media_span(cfg.delta_r)
    } else if rate.is_reverse() {
        -(cfg.delta_r as i64)
    } else {
        cfg.delta_r as i64
    };
    let t = t_press.offset_clamped(-lag, transport.duration());
    if cfg.snap_marks_to_frame {
        snap_to_frame(t, transport.fps()).min(transport.duration())
    } else {
        t
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PendingStart {
    pub start_intended: TimePoint,
    pub track_id: String,
    pub type_id: String,
}

/// The two-press mark state machine.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SpeedLabelState {
    pub pending: Option<PendingStart>,
    pub active_track_id: Option<String>,
    pub active_type_id: Option<String>,
    /// Set when a pending start was dropped by switching tracks.
    pub cancelled_pending: bool,
}

/// Result of one press of the mark key.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum MarkOutcome {
    Started(TimePoint),
    /// The second press; the returned `Create` still has to be committed.
    Finished(Edit),
}

impl SpeedLabelState {
    pub fn new(track_id: impl Into<String>, type_id: impl Into<String>) -> Self {
        SpeedLabelState {
            active_track_id: Some(track_id.into()),
            active_type_id: Some(type_id.into()),
            ..Default::default()
        }
    }

    /// Selects the track new marks go to. Switching away drops a pending start.
    pub fn set_active_track(&self, track_id: &str) -> SpeedLabelState {
        let mut next = self.clone();
        let switching = self.active_track_id.as_deref() != Some(track_id);
        if switching && next.pending.take().is_some() {
            next.cancelled_pending = true;
        }
        next.active_track_id = Some(track_id.to_string());
        next
    }

    pub fn set_active_type(&self, type_id: &str) -> SpeedLabelState {
        SpeedLabelState {
            active_type_id: Some(type_id.to_string()),
            ..self.clone()
        }
    }

    pub fn cancel(&self) -> SpeedLabelState {
        SpeedLabelState {
            pending: None,
            cancelled_pending: self.pending.is_some(),
            ..self.clone()
        }
    }

    /// Handles one press of the mark key at the current playhead.
    pub fn mark(
        &self,
        transport: &TransportState,
        dataset: &Dataset,
        cfg: &ReactionConfig,
    ) -> Result<(SpeedLabelState, MarkOutcome)> {
        let (Some(track_id), Some(type_id)) = (&self.active_track_id, &self.active_type_id) else {
            return Err(Error::NoActiveTrack);
        };
        if dataset.track(track_id).is_none() {
            return Err(Error::TrackNotFound(track_id.clone()));
        }
        if dataset.label_type(type_id).is_none() {
            return Err(Error::TypeNotFound(type_id.clone()));
        }
        let intended = reaction_compensate(transport.position(), cfg, transport);
        let mut next = self.clone();
        next.cancelled_pending = false;

        let Some(pending) = next.pending.take() else {
            next.pending = Some(PendingStart {
                start_intended: intended,
                track_id: track_id.clone(),
                type_id: type_id.clone(),
            });
            return Ok((next, MarkOutcome::Started(intended)));
        };

        let st = pending.start_intended;
        let (start, end) = if intended >= st {
            (st, intended)
        } else if transport.rate().is_reverse() {
            // Watching backward, the offset is seen first.
            (intended, st)
        } else {
            (st, st)
        };
        let edit = Edit::Create {
            label: LabelDraft::new(pending.track_id, pending.type_id, start, end),
            index: None,
        };
        Ok((next, MarkOutcome::Finished(edit)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Start,
    End,
}

/// Label contents for a `Create`; `id` is assigned when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDraft {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
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
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: Extra,
}

impl LabelDraft {
    pub fn new(
        track_id: impl Into<String>,
        type_id: impl Into<String>,
        start: TimePoint,
        end: TimePoint,
    ) -> Self {
        LabelDraft {
            id: None,
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

    fn into_label(self, id: String) -> Label {
        Label {
            id,
            track_id: self.track_id,
            type_id: self.type_id,
            start: self.start,
            end: self.end,
            text: self.text,
            spatial: self.spatial,
            attributes: self.attributes,
            extra: self.extra,
        }
    }
}

impl From<Label> for LabelDraft {
    fn from(l: Label) -> Self {
        LabelDraft {
            id: Some(l.id),
            track_id: l.track_id,
            type_id: l.type_id,
            start: l.start,
            end: l.end,
            text: l.text,
            spatial: l.spatial,
            attributes: l.attributes,
            extra: l.extra,
        }
    }
}

/// One reversible change to a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    Create {
        label: LabelDraft,
        /// Position in the label list; appended when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<usize>,
    },
    Delete {
        id: String,
    },
    Move {
        id: String,
        delta: i64,
    },
    Resize {
        id: String,
        edge: Edge,
        time: TimePoint,
    },
    SetText {
        id: String,
        text: String,
    },
    SetType {
        id: String,
        type_id: String,
    },
    /// `value: None` removes the attribute.
    SetAttr {
        id: String,
        key: String,
        value: Option<AttrValue>,
    },
    SetTrack {
        id: String,
        track_id: String,
    },
}

impl Edit {
    /// The label this edit targets, when already known.
    pub fn label_id(&self) -> Option<&str> {
        match self {
            Edit::Create { label, .. } => label.id.as_deref(),
            Edit::Delete { id }
            | Edit::Move { id, .. }
            | Edit::Resize { id, .. }
            | Edit::SetText { id, .. }
            | Edit::SetType { id, .. }
            | Edit::SetAttr { id, .. }
            | Edit::SetTrack { id, .. } => Some(id),
        }
    }
}

/// A committed edit.
#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub dataset: Dataset,
    /// The edit as actually performed: ids assigned, clamped deltas resolved.
    pub edit: Edit,
    pub inverse: Edit,
}

/// Applies `edit`, bumping the revision by one.
///
/// Labels must stay within `[0, duration]`. `Move` shifts the whole label and
/// stops at the timeline bounds, keeping its length.
pub fn apply_edit(d: &Dataset, edit: &Edit, duration: TimePoint) -> Result<Applied> {
    let mut next = d.clone();
    let (edit, inverse) = match edit.clone() {
        Edit::Create { label, index } => {
            check_refs(d, &label.track_id, &label.type_id)?;
            check_interval(label.start, label.end, duration)?;
            check_payload(&label.spatial, &label.attributes)?;
            let id = match &label.id {
                Some(id) if id.is_empty() => {
                    return Err(Error::InvalidLabel("empty label id".into()))
                }
                Some(id) if d.label(id).is_some() => {
                    return Err(Error::DuplicateLabelId(id.clone()))
                }
                Some(id) => id.clone(),
                None => d.next_label_id(),
            };
            let at = index.unwrap_or(d.labels.len()).min(d.labels.len());
            let draft = LabelDraft {
                id: Some(id.clone()),
                ..label
            };
            next.labels.insert(at, draft.clone().into_label(id.clone()));
            (
                Edit::Create {
                    label: draft,
                    index: Some(at),
                },
                Edit::Delete { id },
            )
        }
        Edit::Delete { id } => {
            let at = position(d, &id)?;
            let label = next.labels.remove(at);
            (
                Edit::Delete { id },
                Edit::Create {
                    label: label.into(),
                    index: Some(at),
                },
            )
        }
        Edit::Move { id, delta } => {
            let at = position(d, &id)?;
            let label = &mut next.labels[at];
            let len = label.duration();
            let latest_start = duration.0.saturating_sub(len);
            let start =
                (label.start.0 as i128 + delta as i128).clamp(0, latest_start as i128) as u64;
            let actual = start as i64 - label.start.0 as i64;
            label.start = TimePoint(start);
            label.end = TimePoint(start + len);
            (
                Edit::Move {
                    id: id.clone(),
                    delta: actual,
                },
                Edit::Move { id, delta: -actual },
            )
        }
        Edit::Resize { id, edge, time } => {
            let at = position(d, &id)?;
            let label = &mut next.labels[at];
            let old = match edge {
                Edge::Start => {
                    check_interval(time, label.end, duration)?;
                    std::mem::replace(&mut label.start, time)
                }
                Edge::End => {
                    check_interval(label.start, time, duration)?;
                    std::mem::replace(&mut label.end, time)
                }
            };
            (
                Edit::Resize {
                    id: id.clone(),
                    edge,
                    time,
                },
                Edit::Resize {
                    id,
                    edge,
                    time: old,
                },
            )
        }
        Edit::SetText { id, text } => {
            let at = position(d, &id)?;
            let old = std::mem::replace(&mut next.labels[at].text, text.clone());
            (
                Edit::SetText {
                    id: id.clone(),
                    text,
                },
                Edit::SetText { id, text: old },
            )
        }
        Edit::SetType { id, type_id } => {
            let at = position(d, &id)?;
            if d.label_type(&type_id).is_none() {
                return Err(Error::TypeNotFound(type_id));
            }
            let old = std::mem::replace(&mut next.labels[at].type_id, type_id.clone());
            (
                Edit::SetType {
                    id: id.clone(),
                    type_id,
                },
                Edit::SetType { id, type_id: old },
            )
        }
        Edit::SetAttr { id, key, value } => {
            let at = position(d, &id)?;
            if matches!(value, Some(AttrValue::Number(n)) if !n.is_finite()) {
                return Err(Error::InvalidLabel(format!(
                    "attribute `{key}` is not finite"
                )));
            }
            let attrs = &mut next.labels[at].attributes;
            let old = match &value {
                Some(v) => attrs.insert(key.clone(), v.clone()),
                None => attrs.remove(&key),
            };
            (
                Edit::SetAttr {
                    id: id.clone(),
                    key: key.clone(),
                    value,
                },
                Edit::SetAttr {
                    id,
                    key,
                    value: old,
                },
            )
        }
        Edit::SetTrack { id, track_id } => {
            let at = position(d, &id)?;
            if d.track(&track_id).is_none() {
                return Err(Error::TrackNotFound(track_id));
            }
            let old = std::mem::replace(&mut next.labels[at].track_id, track_id.clone());
            (
                Edit::SetTrack {
                    id: id.clone(),
                    track_id,
                },
                Edit::SetTrack { id, track_id: old },
            )
        }
    };
    next.revision += 1;
    Ok(Applied {
        dataset: next,
        edit,
        inverse,
    })
}

/// Applies a batch all-or-nothing, returning the final dataset and the applied edits.
pub fn apply_batch(
    d: &Dataset,
    edits: &[Edit],
    duration: TimePoint,
) -> Result<(Dataset, Vec<Applied>), (usize, Error)> {
    let mut current = d.clone();
    let mut applied = Vec::with_capacity(edits.len());
    for (i, e) in edits.iter().enumerate() {
        let a = apply_edit(&current, e, duration).map_err(|err| (i, err))?;
        current = a.dataset.clone();
        applied.push(a);
    }
    Ok((current, applied))
}

/// Builds the `Resize` that moves one edge of a label by whole frames.
///
/// The edge is stepped on the frame grid, then held so that `start <= end`.
pub fn fine_tune(
    d: &Dataset,
    id: &str,
    edge: Edge,
    delta_frames: i64,
    fps: FrameRate,
    duration: TimePoint,
) -> Result<Edit> {
    let label = d
        .label(id)
        .ok_or_else(|| Error::LabelNotFound(id.to_string()))?;
    let time = match edge {
        Edge::Start => frame_step(label.start, fps, delta_frames, duration).min(label.end),
        Edge::End => frame_step(label.end, fps, delta_frames, duration).max(label.start),
    };
    Ok(Edit::Resize {
        id: id.to_string(),
        edge,
        time,
    })
}

fn position(d: &Dataset, id: &str) -> Result<usize> {
    d.label_position(id)
        .ok_or_else(|| Error::LabelNotFound(id.to_string()))
}

fn check_refs(d: &Dataset, track_id: &str, type_id: &str) -> Result<()> {
    if d.track(track_id).is_none() {
        return Err(Error::TrackNotFound(track_id.to_string()));
    }
    if d.label_type(type_id).is_none() {
        return Err(Error::TypeNotFound(type_id.to_string()));
    }
    Ok(())
}

fn check_interval(start: TimePoint, end: TimePoint, duration: TimePoint) -> Result<()> {
    if start > end || end > duration {
        return Err(Error::InvalidInterval {
            start: start.0,
            end: end.0,
            duration: duration.0,
        });
    }
    Ok(())
}

fn check_payload(spatial: &SpatialPayload, attributes: &BTreeMap<String, AttrValue>) -> Result<()> {
    if !spatial.is_valid() {
        return Err(Error::InvalidLabel("spatial payload out of range".into()));
    }
    if let Some((k, _)) = attributes
        .iter()
        .find(|(_, v)| matches!(v, AttrValue::Number(n) if !n.is_finite()))
    {
        return Err(Error::InvalidLabel(format!(
            "attribute `{k}` is not finite"
        )));
    }
    Ok(())
}

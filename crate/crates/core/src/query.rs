//! Search, filtering and playhead lookup. Linear scans over the label list.

use crate::error::{Error, Result};
use crate::model::{Dataset, Label, TimePoint};

fn sorted_ids<'a>(labels: impl Iterator<Item = &'a Label>) -> Vec<String> {
    let mut hits: Vec<&Label> = labels.collect();
    hits.sort_by(|a, b| (a.start, &a.id).cmp(&(b.start, &b.id)));
    hits.into_iter().map(|l| l.id.clone()).collect()
}

/// Labels whose text or type name contains `text`, ignoring case, ordered by `(start, id)`.
pub fn search(d: &Dataset, text: &str) -> Vec<String> {
    let needle = text.to_lowercase();
    sorted_ids(d.labels.iter().filter(|l| {
        needle.is_empty()
            || l.text.to_lowercase().contains(&needle)
            || d.label_type(&l.type_id)
                .is_some_and(|t| t.name.to_lowercase().contains(&needle))
    }))
}

pub fn filter_by_type(d: &Dataset, type_id: &str) -> Result<Vec<String>> {
    if d.label_type(type_id).is_none() {
        return Err(Error::TypeNotFound(type_id.to_string()));
    }
    Ok(sorted_ids(d.labels.iter().filter(|l| l.type_id == type_id)))
}

/// Labels on `track_id` under the playhead: `start <= t < end`, or a point label at `t`.
pub fn labels_at(d: &Dataset, track_id: &str, t: TimePoint) -> Result<Vec<String>> {
    if d.track(track_id).is_none() {
        return Err(Error::TrackNotFound(track_id.to_string()));
    }
    Ok(sorted_ids(d.labels.iter().filter(|l| {
        l.track_id == track_id && (l.start <= t && t < l.end || l.is_point() && l.start == t)
    })))
}

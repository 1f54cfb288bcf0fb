//! VGG Image Annotator (VIA 3) project documents.
//!
//! Only temporal segments (metadata with a two-element `z`) are imported.
//! Each temporal attribute becomes a track, and each distinct value of a
//! segment's primary attribute becomes a label type.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::model::{AttrValue, Dataset, Label, LabelType, TimePoint, Track};

/// Anchor VIA uses for attributes describing a temporal segment.
const TEMPORAL_ANCHOR: &str = "FILE1_Z2_XY0";
const FALLBACK_TRACK: &str = "via-segments";

const PALETTE: [&str; 8] = [
    "#e53935", "#1e88e5", "#43a047", "#fb8c00", "#8e24aa", "#00acc1", "#6d4c41", "#546e7a",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ViaImport {
    pub dataset: Dataset,
    pub warnings: Vec<String>,
}

struct Attribute<'a> {
    name: &'a str,
    temporal: bool,
    options: Option<&'a Map<String, Value>>,
}

impl Attribute<'_> {
    /// Human-readable value: option text for select-like attributes, raw text otherwise.
    fn display(&self, raw: &Value) -> String {
        let raw_text = match raw {
            Value::String(s) => s.clone(),
            Value::Null => String::new(),
            other => other.to_string(),
        };
        self.options
            .and_then(|o| o.get(&raw_text))
            .and_then(Value::as_str)
            .map_or(raw_text.clone(), str::to_string)
    }
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedDocument(msg.into())
}

/// Sorts VIA ids numerically when they are numbers.
fn id_order(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.cmp(b),
    }
}

fn seconds(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
    .filter(|x| x.is_finite())
}

fn to_micros(secs: f64) -> u64 {
    (secs * 1_000_000.0).round().max(0.0) as u64
}

fn section<'a>(doc: &'a Map<String, Value>, key: &str) -> Result<Option<&'a Map<String, Value>>> {
    match doc.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Object(m)) => Ok(Some(m)),
        Some(_) => Err(malformed(format!("`{key}` must be an object"))),
    }
}

pub fn import_via(doc: &[u8]) -> Result<ViaImport> {
    let root: Value = serde_json::from_slice(doc).map_err(|e| malformed(e.to_string()))?;
    let root = root
        .as_object()
        .ok_or_else(|| malformed("VIA project must be a JSON object"))?;
    let mut warnings = Vec::new();

    let mut attributes = BTreeMap::new();
    if let Some(attrs) = section(root, "attribute")? {
        for (aid, a) in attrs {
            let a = a
                .as_object()
                .ok_or_else(|| malformed(format!("attribute `{aid}` must be an object")))?;
            attributes.insert(
                aid.as_str(),
                Attribute {
                    name: a.get("aname").and_then(Value::as_str).unwrap_or(aid),
                    temporal: a.get("anchor_id").and_then(Value::as_str) == Some(TEMPORAL_ANCHOR),
                    options: a.get("options").and_then(Value::as_object),
                },
            );
        }
    }

    let mut dataset = Dataset::empty();
    let mut aids: Vec<&str> = attributes.keys().copied().collect();
    aids.sort_by(|a, b| id_order(a, b));
    for aid in &aids {
        if attributes[aid].temporal {
            dataset
                .tracks
                .push(Track::new(format!("via-{aid}"), attributes[aid].name));
        }
    }

    let mut labels = Vec::new();
    let mut video_ids = Vec::new();
    if let Some(metadata) = section(root, "metadata")? {
        for (mid, m) in metadata {
            let m = m
                .as_object()
                .ok_or_else(|| malformed(format!("metadata `{mid}` must be an object")))?;
            let z = match m.get("z") {
                Some(Value::Array(z)) => z,
                None => &Vec::new(),
                Some(_) => {
                    return Err(malformed(format!("metadata `{mid}`: `z` must be an array")))
                }
            };
            if z.len() != 2 {
                warnings.push(format!(
                    "metadata `{mid}` is not a temporal segment; skipped"
                ));
                continue;
            }
            let (Some(a), Some(b)) = (seconds(&z[0]), seconds(&z[1])) else {
                return Err(malformed(format!(
                    "metadata `{mid}`: segment times must be numbers"
                )));
            };
            if a < 0.0 || b < 0.0 {
                warnings.push(format!("metadata `{mid}` has negative times; clamped to 0"));
            }
            let (mut start, mut end) = (to_micros(a), to_micros(b));
            if end < start {
                warnings.push(format!("metadata `{mid}` has reversed times; swapped"));
                std::mem::swap(&mut start, &mut end);
            }
            if let Some(vid) = m.get("vid").and_then(Value::as_str) {
                if !video_ids.contains(&vid) {
                    video_ids.push(vid);
                }
            }

            let empty = Map::new();
            let av = match m.get("av") {
                Some(Value::Object(av)) => av,
                None | Some(Value::Null) => &empty,
                Some(_) => {
                    return Err(malformed(format!(
                        "metadata `{mid}`: `av` must be an object"
                    )))
                }
            };
            let mut keys: Vec<&str> = av.keys().map(String::as_str).collect();
            keys.sort_by(|a, b| id_order(a, b));
            let primary = keys
                .iter()
                .copied()
                .find(|k| attributes.get(k).is_some_and(|a| a.temporal))
                .or_else(|| keys.first().copied());

            let mut label = Label::new(
                mid.clone(),
                FALLBACK_TRACK,
                "via-segment",
                TimePoint(start),
                TimePoint(end),
            );
            for key in &keys {
                let raw = &av[*key];
                let (name, value) = match attributes.get(key) {
                    Some(attr) => (attr.name.to_string(), AttrValue::Text(attr.display(raw))),
                    None => (key.to_string(), json_attr(raw)),
                };
                label.attributes.insert(name, value);
            }
            if let Some(aid) = primary {
                let text = match attributes.get(aid) {
                    Some(attr) => attr.display(&av[aid]),
                    None => json_attr(&av[aid]).to_string(),
                };
                label.track_id = format!("via-{aid}");
                if dataset.track(&label.track_id).is_none() {
                    let name = attributes.get(aid).map_or(aid, |a| a.name);
                    dataset
                        .tracks
                        .push(Track::new(label.track_id.clone(), name));
                }
                label.type_id = format!("via-{aid}:{text}");
                if dataset.label_type(&label.type_id).is_none() {
                    let name = if text.trim().is_empty() {
                        attributes.get(aid).map_or(aid, |a| a.name).to_string()
                    } else {
                        text.clone()
                    };
                    push_type(&mut dataset, &label.type_id, name);
                }
                label.text = text;
            } else {
                if dataset.track(FALLBACK_TRACK).is_none() {
                    dataset.tracks.push(Track::new(FALLBACK_TRACK, "Segments"));
                }
                if dataset.label_type("via-segment").is_none() {
                    push_type(&mut dataset, "via-segment", "Segment".into());
                }
            }
            labels.push(label);
        }
    }
    if video_ids.len() > 1 {
        warnings.push(format!(
            "segments span {} videos; all were merged onto one timeline",
            video_ids.len()
        ));
    }
    labels.sort_by(|a, b| (a.start, a.end, &a.id).cmp(&(b.start, b.end, &b.id)));
    dataset.labels = labels;
    crate::model::validate_dataset(&dataset).into_result()?;
    Ok(ViaImport { dataset, warnings })
}

fn json_attr(v: &Value) -> AttrValue {
    match v {
        Value::Number(n) => n
            .as_f64()
            .map_or_else(|| AttrValue::Text(n.to_string()), AttrValue::Number),
        Value::String(s) => AttrValue::Text(s.clone()),
        other => AttrValue::Text(other.to_string()),
    }
}

fn push_type(d: &mut Dataset, id: &str, name: String) {
    let color = PALETTE[d.types.len() % PALETTE.len()].to_string();
    d.types.push(LabelType {
        id: id.to_string(),
        name,
        color,
    });
}

/// Writes a minimal VIA 3 project: one temporal attribute per track whose
/// options are the dataset's label types.
pub fn export_via(d: &Dataset) -> Vec<u8> {
    let mut attribute = Map::new();
    let mut track_aid = BTreeMap::new();
    let options: Map<String, Value> = d
        .types
        .iter()
        .enumerate()
        .map(|(i, t)| (i.to_string(), Value::String(t.name.clone())))
        .collect();
    for (i, track) in d.tracks.iter().enumerate() {
        let aid = (i + 1).to_string();
        attribute.insert(
            aid.clone(),
            json!({
                "aname": track.name,
                "anchor_id": TEMPORAL_ANCHOR,
                "type": 4,
                "desc": "",
                "options": options,
                "default_option_id": "",
            }),
        );
        track_aid.insert(track.id.as_str(), aid);
    }
    let mut metadata = Map::new();
    for l in &d.labels {
        let mut av = Map::new();
        if let (Some(aid), Some(opt)) = (
            track_aid.get(l.track_id.as_str()),
            d.types.iter().position(|t| t.id == l.type_id),
        ) {
            av.insert(aid.clone(), Value::String(opt.to_string()));
        }
        metadata.insert(
            l.id.clone(),
            json!({
                "vid": "1",
                "flg": 0,
                "z": [l.start.0 as f64 / 1e6, l.end.0 as f64 / 1e6],
                "xy": [],
                "av": av,
            }),
        );
    }
    let doc = json!({
        "project": {
            "pid": "__VIA_PROJECT_ID__",
            "rev": d.revision.to_string(),
            "rev_timestamp": "",
            "pname": "exported",
            "creator": "feva",
            "created": 0,
            "vid_list": ["1"],
        },
        "config": {},
        "attribute": attribute,
        "file": {"1": {"fid": "1", "fname": "video", "type": 4, "loc": 1, "src": ""}},
        "view": {"1": {"fid_list": ["1"]}},
        "metadata": metadata,
    });
    let mut out = serde_json::to_vec_pretty(&doc).expect("VIA serialization is infallible");
    out.push(b'\n');
    out
}

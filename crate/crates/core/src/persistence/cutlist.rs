//! Cut-lists: one clip or frame extraction record per label, for an external
//! media processor.

use serde::Serialize;

use crate::model::{Dataset, TimePoint, VideoSource};

pub const CUTLIST_HEADER: [&str; 6] = ["kind", "start_us", "end_us", "label_id", "type", "text"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CutKind {
    Clip,
    Frame,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CutRow {
    pub kind: CutKind,
    /// Source-local times.
    pub start_us: u64,
    /// Empty for frames.
    pub end_us: Option<u64>,
    pub label_id: String,
    #[serde(rename = "type")]
    pub type_name: String,
    pub text: String,
}

impl CutRow {
    /// Expands a whitespace-separated command template into argv.
    ///
    /// Placeholders: `{input}`, `{start}` and `{end}` (seconds), `{label_id}`, `{kind}`.
    pub fn command(&self, template: &str, input: &str) -> Vec<String> {
        let secs = |us: u64| format!("{}.{:06}", us / 1_000_000, us % 1_000_000);
        let end = self.end_us.unwrap_or(self.start_us);
        let kind = match self.kind {
            CutKind::Clip => "clip",
            CutKind::Frame => "frame",
        };
        template
            .split_whitespace()
            .map(|arg| {
                arg.replace("{input}", input)
                    .replace("{start}", &secs(self.start_us))
                    .replace("{end}", &secs(end))
                    .replace("{label_id}", &self.label_id)
                    .replace("{kind}", kind)
            })
            .collect()
    }
}

/// Rows in `(start, end, id)` order, mapped onto `source`'s own clock.
pub fn cutlist_rows(d: &Dataset, source: &VideoSource) -> Vec<CutRow> {
    let mut labels: Vec<_> = d.labels.iter().collect();
    labels.sort_by(|a, b| (a.start, a.end, &a.id).cmp(&(b.start, b.end, &b.id)));
    labels
        .into_iter()
        .map(|l| {
            let local = |t: TimePoint| source.local_time(t).0;
            let type_name = d
                .label_type(&l.type_id)
                .map_or_else(|| l.type_id.clone(), |t| t.name.clone());
            CutRow {
                kind: if l.is_point() {
                    CutKind::Frame
                } else {
                    CutKind::Clip
                },
                start_us: local(l.start),
                end_us: (!l.is_point()).then(|| local(l.end)),
                label_id: l.id.clone(),
                type_name,
                text: l.text.clone(),
            }
        })
        .collect()
}

/// Comma-separated cut-list with a header row.
pub fn export_cutlist(d: &Dataset, source: &VideoSource) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CUTLIST_HEADER).expect("in-memory write");
    for row in cutlist_rows(d, source) {
        w.serialize(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

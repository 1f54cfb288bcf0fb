//! SubRip closed-caption export.

use std::fmt::Write;

use crate::model::{Dataset, Label, TimePoint};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SrtOptions {
    /// Display time given to point labels.
    pub min_display: u64,
    /// Caption ends are clamped here when set (usually the video duration).
    pub video_end: Option<TimePoint>,
    /// Restrict export to these tracks.
    pub track_ids: Option<Vec<String>>,
}

impl Default for SrtOptions {
    fn default() -> Self {
        SrtOptions {
            min_display: 500_000,
            video_end: None,
            track_ids: None,
        }
    }
}

/// `HH:MM:SS,mmm`, milliseconds rounded half up from microseconds.
pub fn format_timecode(t: TimePoint) -> String {
    let ms = (t.0 + 500) / 1000;
    format!(
        "{:02}:{:02}:{:02},{:03}",
        ms / 3_600_000,
        ms / 60_000 % 60,
        ms / 1000 % 60,
        ms % 1000
    )
}

/// Caption text: the label text with blank lines squeezed out, or the type name.
fn caption_text(d: &Dataset, l: &Label) -> String {
    let text = l
        .text
        .lines()
        .map(str::trim_end)
        .filter(|line| !line.trim().is_empty())
        .collect::<Vec<_>>()
        .join("\n");
    if !text.is_empty() {
        return text;
    }
    d.label_type(&l.type_id)
        .map(|t| t.name.clone())
        .unwrap_or_else(|| l.type_id.clone())
}

pub fn export_srt(d: &Dataset, opts: &SrtOptions) -> String {
    let mut labels: Vec<&Label> = d
        .labels
        .iter()
        .filter(|l| {
            opts.track_ids
                .as_ref()
                .is_none_or(|ids| ids.contains(&l.track_id))
        })
        .collect();
    labels.sort_by(|a, b| (a.start, a.end, &a.id).cmp(&(b.start, b.end, &b.id)));

    let mut out = String::new();
    for (i, l) in labels.into_iter().enumerate() {
        let mut end = if l.is_point() {
            TimePoint(l.start.0 + opts.min_display)
        } else {
            l.end
        };
        if let Some(limit) = opts.video_end {
            end = end.min(limit.max(l.start));
        }
        if i > 0 {
            out.push('\n');
        }
        let _ = write!(
            out,
            "{}\n{} --> {}\n{}\n",
            i + 1,
            format_timecode(l.start),
            format_timecode(end),
            caption_text(d, l)
        );
    }
    out
}

//! Frame thumbnails produced by an external extractor command and cached in memory.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use tokio::sync::Mutex;

use crate::model::{TimePoint, VideoSource};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ThumbError {
    #[error("no frame extractor configured")]
    NotConfigured,
    #[error("frame extraction failed: {0}")]
    Failed(String),
}

const STDERR_EXCERPT: usize = 512;

/// The frame shown at `t`: the nearest frame, but never past the last one.
pub fn thumbnail_frame(source: &VideoSource, t: TimePoint) -> u64 {
    let fps = source.fps;
    let mut index = fps.frame_index(t.min(source.duration));
    while index > 0 && fps.frame_to_time(index) >= source.duration {
        index -= 1;
    }
    index
}

/// Splits the template on whitespace, then fills `{input}`, `{time}` (seconds),
/// `{width}` and `{output}` in each argument.
pub fn expand_template(
    template: &str,
    input: &str,
    time: TimePoint,
    width: u32,
    output: &str,
) -> Vec<String> {
    let secs = format!("{}.{:06}", time.0 / 1_000_000, time.0 % 1_000_000);
    template
        .split_whitespace()
        .map(|arg| {
            arg.replace("{input}", input)
                .replace("{time}", &secs)
                .replace("{width}", &width.to_string())
                .replace("{output}", output)
        })
        .collect()
}

type Key = (String, u64, u32);

pub struct Thumbnailer {
    template: Option<String>,
    cache: Mutex<HashMap<Key, Arc<Vec<u8>>>>,
    runs: AtomicUsize,
}

impl Thumbnailer {
    pub fn new(template: Option<String>) -> Self {
        Thumbnailer {
            template: template.filter(|t| !t.trim().is_empty()),
            cache: Mutex::new(HashMap::new()),
            runs: AtomicUsize::new(0),
        }
    }

    /// How many times the extractor has been started.
    pub fn extractor_runs(&self) -> usize {
        self.runs.load(Ordering::Relaxed)
    }

    /// Returns the image for the frame nearest `t` on `source`, whose media file is `input`.
    pub async fn get(
        &self,
        source: &VideoSource,
        input: &Path,
        t: TimePoint,
        width: u32,
    ) -> Result<Arc<Vec<u8>>, ThumbError> {
        let template = self.template.as_deref().ok_or(ThumbError::NotConfigured)?;
        let frame = thumbnail_frame(source, t);
        let key = (source.id.clone(), frame, width);
        if let Some(hit) = self.cache.lock().await.get(&key) {
            return Ok(hit.clone());
        }
        let time = source.local_time(source.fps.frame_to_time(frame));
        let bytes = self.extract(template, input, time, width).await?;
        let mut cache = self.cache.lock().await;
        Ok(cache.entry(key).or_insert_with(|| Arc::new(bytes)).clone())
    }

    async fn extract(
        &self,
        template: &str,
        input: &Path,
        time: TimePoint,
        width: u32,
    ) -> Result<Vec<u8>, ThumbError> {
        let dir = tempfile::tempdir().map_err(|e| ThumbError::Failed(e.to_string()))?;
        let output = dir.path().join("frame.jpg");
        let argv = expand_template(
            template,
            &input.to_string_lossy(),
            time,
            width,
            &output.to_string_lossy(),
        );
        let (program, args) = argv.split_first().ok_or(ThumbError::NotConfigured)?;
        self.runs.fetch_add(1, Ordering::Relaxed);
        let out = tokio::process::Command::new(program)
            .args(args)
            .stdin(std::process::Stdio::null())
            .output()
            .await
            .map_err(|e| ThumbError::Failed(format!("cannot run `{program}`: {e}")))?;
        if !out.status.success() {
            let stderr = String::from_utf8_lossy(&out.stderr);
            let start = stderr.len().saturating_sub(STDERR_EXCERPT);
            let start = (start..stderr.len())
                .find(|i| stderr.is_char_boundary(*i))
                .unwrap_or(start);
            return Err(ThumbError::Failed(format!(
                "{}: {}",
                out.status,
                stderr[start..].trim()
            )));
        }
        tokio::fs::read(&output)
            .await
            .map_err(|e| ThumbError::Failed(format!("extractor wrote no output: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FrameRate;

    fn source() -> VideoSource {
        VideoSource {
            id: "cam".into(),
            uri: "cam.mp4".into(),
            fps: FrameRate::integer(25).unwrap(),
            duration: TimePoint::from_secs(2),
            offset: 0,
            width: 0,
            height: 0,
        }
    }

    #[test]
    fn frame_selection() {
        assert_eq!(thumbnail_frame(&source(), TimePoint(0)), 0);
        assert_eq!(thumbnail_frame(&source(), TimePoint(1_019_999)), 25);
        assert_eq!(thumbnail_frame(&source(), TimePoint(1_020_000)), 26);
        // 2 s is one past the last frame (49 at 1.96 s)
        assert_eq!(thumbnail_frame(&source(), TimePoint::from_secs(99)), 49);
    }

    #[test]
    fn template_expansion() {
        assert_eq!(
            expand_template(
                "ffmpeg -ss {time} -i {input} -vf scale={width}:-1 {output}",
                "/m/a.mp4",
                TimePoint(1_040_000),
                160,
                "/t/o.jpg"
            ),
            [
                "ffmpeg",
                "-ss",
                "1.040000",
                "-i",
                "/m/a.mp4",
                "-vf",
                "scale=160:-1",
                "/t/o.jpg"
            ]
        );
    }

    #[tokio::test]
    async fn unconfigured() {
        let t = Thumbnailer::new(None);
        assert_eq!(
            t.get(&source(), Path::new("x"), TimePoint(0), 10)
                .await
                .unwrap_err(),
            ThumbError::NotConfigured
        );
    }

    #[tokio::test]
    async fn cached_after_first_extraction() {
        let dir = tempfile::tempdir().unwrap();
        let script = dir.path().join("x.sh");
        std::fs::write(
            &script,
            "#!/bin/sh\nprintf 'frame %s %s' \"$1\" \"$2\" > \"$3\"\n",
        )
        .unwrap();
        let t = Thumbnailer::new(Some(format!(
            "sh {} {{time}} {{width}} {{output}}",
            script.display()
        )));
        let a = t
            .get(&source(), Path::new("in"), TimePoint(1_000_000), 64)
            .await
            .unwrap();
        let b = t
            .get(&source(), Path::new("in"), TimePoint(1_010_000), 64)
            .await
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(&a[..], b"frame 1.000000 64");
        assert_eq!(t.extractor_runs(), 1);
        let last = t
            .get(&source(), Path::new("in"), TimePoint::from_secs(9), 64)
            .await
            .unwrap();
        assert_eq!(&last[..], b"frame 1.960000 64");
    }

    #[tokio::test]
    async fn failures_carry_stderr() {
        let t = Thumbnailer::new(Some("sh -c exit_with_message".into()));
        match t
            .get(&source(), Path::new("in"), TimePoint(0), 8)
            .await
            .unwrap_err()
        {
            ThumbError::Failed(msg) => assert!(msg.contains("exit_with_message"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let t = Thumbnailer::new(Some("/definitely/not/here {output}".into()));
        assert!(matches!(
            t.get(&source(), Path::new("in"), TimePoint(0), 8).await,
            Err(ThumbError::Failed(_))
        ));
    }
}

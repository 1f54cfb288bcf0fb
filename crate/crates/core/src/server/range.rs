//! Single-part HTTP byte ranges.

use std::fs::File;
use std::io::{self, Read, Seek, SeekFrom};
use std::path::Path;

/// How to answer a request for a resource of `size` bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangePlan {
    /// 200 with the whole body.
    Full,
    /// 206 with bytes `start..=end`.
    Partial { start: u64, end: u64 },
    /// 416.
    Unsatisfiable,
}

impl RangePlan {
    pub fn status(self) -> u16 {
        match self {
            RangePlan::Full => 200,
            RangePlan::Partial { .. } => 206,
            RangePlan::Unsatisfiable => 416,
        }
    }

    /// `(offset, length)` of the body.
    pub fn span(self, size: u64) -> (u64, u64) {
        match self {
            RangePlan::Full => (0, size),
            RangePlan::Partial { start, end } => (start, end - start + 1),
            RangePlan::Unsatisfiable => (0, 0),
        }
    }

    pub fn content_range(self, size: u64) -> Option<String> {
        match self {
            RangePlan::Full => None,
            RangePlan::Partial { start, end } => Some(format!("bytes {start}-{end}/{size}")),
            RangePlan::Unsatisfiable => Some(format!("bytes */{size}")),
        }
    }
}

/// Interprets a `Range` header.
///
/// Headers that are absent, syntactically invalid, use another unit, or ask
/// for several ranges are answered with the full body.
pub fn plan_range(header: Option<&str>, size: u64) -> RangePlan {
    let Some(set) = header.and_then(|h| h.trim().strip_prefix("bytes=")) else {
        return RangePlan::Full;
    };
    if set.contains(',') {
        return RangePlan::Full;
    }
    let Some((first, last)) = set.trim().split_once('-') else {
        return RangePlan::Full;
    };
    let num = |s: &str| -> Option<u64> {
        (!s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()))
            .then(|| s.parse().ok())
            .flatten()
    };
    match (first.trim(), last.trim()) {
        ("", suffix) => match num(suffix) {
            None => RangePlan::Full,
            Some(0) => RangePlan::Unsatisfiable,
            Some(_) if size == 0 => RangePlan::Unsatisfiable,
            Some(n) => RangePlan::Partial {
                start: size - n.min(size),
                end: size - 1,
            },
        },
        (a, "") => match num(a) {
            None => RangePlan::Full,
            Some(a) if a >= size => RangePlan::Unsatisfiable,
            Some(a) => RangePlan::Partial {
                start: a,
                end: size - 1,
            },
        },
        (a, b) => match (num(a), num(b)) {
            (Some(a), Some(b)) if a <= b => {
                if a >= size {
                    RangePlan::Unsatisfiable
                } else {
                    RangePlan::Partial {
                        start: a,
                        end: b.min(size - 1),
                    }
                }
            }
            _ => RangePlan::Full,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RangeResponse {
    pub status: u16,
    pub headers: Vec<(&'static str, String)>,
    pub body: Vec<u8>,
}

/// Answers a range request for a file in one blocking read.
pub fn handle_range_request(path: &Path, range: Option<&str>) -> io::Result<RangeResponse> {
    let mut file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return Ok(RangeResponse {
                status: 404,
                headers: vec![],
                body: vec![],
            })
        }
        Err(e) => return Err(e),
    };
    let size = file.metadata()?.len();
    let plan = plan_range(range, size);
    let (offset, len) = plan.span(size);
    let mut body = Vec::with_capacity(len as usize);
    file.seek(SeekFrom::Start(offset))?;
    file.take(len).read_to_end(&mut body)?;
    let mut headers = vec![("accept-ranges", "bytes".to_string())];
    if let Some(cr) = plan.content_range(size) {
        headers.push(("content-range", cr));
    }
    headers.push(("content-length", len.to_string()));
    Ok(RangeResponse {
        status: plan.status(),
        headers,
        body,
    })
}

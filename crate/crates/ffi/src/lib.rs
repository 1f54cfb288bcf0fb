//! C ABI over the annotation engine.
//!
//! Strings cross the boundary as NUL-terminated UTF-8. Strings returned
//! through `char **` out-parameters are owned by the caller and must be
//! released with [`feva_string_free`]. Every fallible call returns a
//! [`FevaStatus`]; on failure, [`feva_last_error_code`] and
//! [`feva_last_error_message`] describe the error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use feva_core::persistence::{export_srt, import_via, load_dataset, save_dataset, SrtOptions};
use feva_core::replay::InteractionScript;
use feva_core::{load_config, replay_script, Action, Config, Dataset, Error, FrameRate, Project, Session, TimePoint};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FevaStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A document, config or script could not be parsed.
    Malformed = 3,
    /// Well-formed input that breaks a rule (interval, reference, frame rate, ...).
    Invalid = 4,
    /// A referenced label, track, type or target does not exist.
    NotFound = 5,
    /// The key chord has no binding.
    UnboundChord = 6,
    /// Undo or redo with an empty history.
    EmptyHistory = 7,
    /// The engine panicked; the handle should be freed.
    Panic = 99,
}

/// An interactive annotation session.
pub struct FevaSession {
    inner: Session,
}

struct LastError {
    code: CString,
    message: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<LastError>> = const { RefCell::new(None) };
}

fn set_error(code: &str, message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("nul bytes replaced");
    let code = CString::new(code).expect("codes have no nul bytes");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(LastError { code, message }));
}

struct Failure(FevaStatus, String, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::ScriptStep { source, .. } => Failure::from((**source).clone()).0,
            Error::MalformedDocument(_)
            | Error::UnsupportedVersion(_)
            | Error::MalformedConfig(_)
            | Error::DuplicateBinding { .. }
            | Error::ScriptSyntax { .. } => FevaStatus::Malformed,
            Error::LabelNotFound(_)
            | Error::TrackNotFound(_)
            | Error::TypeNotFound(_)
            | Error::UnresolvableTarget(_) => FevaStatus::NotFound,
            Error::UnboundChord(_) => FevaStatus::UnboundChord,
            Error::NothingToUndo | Error::NothingToRedo => FevaStatus::EmptyHistory,
            Error::InvalidInterval { .. }
            | Error::DuplicateLabelId(_)
            | Error::InvalidLabel(_)
            | Error::NoActiveTrack
            | Error::InvalidRate(_)
            | Error::Invalid(_)
            | Error::InvalidFrameRate { .. }
            | Error::InvalidProject(_) => FevaStatus::Invalid,
        };
        Failure(status, e.code().to_string(), e.to_string())
    }
}

fn fail(status: FevaStatus, code: &str, message: impl Into<String>) -> Failure {
    Failure(status, code.to_string(), message.into())
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FevaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FevaStatus::Ok,
        Ok(Err(Failure(status, code, message))) => {
            set_error(&code, message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error("panic", message);
            FevaStatus::Panic
        }
    }
}

/// # Safety
/// `p` must be null or a valid NUL-terminated string.
unsafe fn required<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(FevaStatus::NullArgument, "null_argument", format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(FevaStatus::InvalidUtf8, "invalid_utf8", format!("`{name}`: {e}")))
}

/// # Safety
/// `p` must be null or a valid NUL-terminated string.
unsafe fn optional<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        required(p, name).map(Some)
    }
}

/// # Safety
/// `out` must be null or valid for writes.
unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(FevaStatus::NullArgument, "null_argument", format!("`{name}` is null")));
    }
    out.write(value);
    Ok(())
}

/// # Safety
/// `out` must be null or valid for writes.
unsafe fn write_string(out: *mut *mut c_char, s: String, name: &str) -> Result<(), Failure> {
    let s = CString::new(s).map_err(|e| fail(FevaStatus::Invalid, "invalid_string", e.to_string()))?;
    write(out, s.into_raw(), name)
}

/// # Safety
/// `s` must be null or a handle from [`feva_session_new`] not yet freed.
unsafe fn session<'a>(s: *mut FevaSession) -> Result<&'a mut FevaSession, Failure> {
    s.as_mut()
        .ok_or_else(|| fail(FevaStatus::NullArgument, "null_argument", "`session` is null"))
}

fn parse_project(json: &str) -> Result<Project, Failure> {
    let project: Project = serde_json::from_str(json)
        .map_err(|e| fail(FevaStatus::Malformed, "malformed_document", format!("project: {e}")))?;
    project.validate()?;
    Ok(project)
}

fn parse_dataset(json: Option<&str>) -> Result<Dataset, Failure> {
    Ok(match json {
        Some(j) => load_dataset(j.as_bytes())?,
        None => Dataset::with_defaults(),
    })
}

fn parse_config(json: Option<&str>) -> Result<Config, Failure> {
    Ok(match json {
        Some(j) => load_config(j.as_bytes())?,
        None => Config::default(),
    })
}

fn to_json(v: &impl serde::Serialize) -> String {
    serde_json::to_string(v).expect("serialization is infallible")
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn feva_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Stable snake_case code of the calling thread's last error, or null.
/// Valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn feva_last_error_code() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |e| e.code.as_ptr()))
}

/// Human-readable message of the calling thread's last error, or null.
/// Valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn feva_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |e| e.message.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn feva_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Opens a session on a project. `dataset_json` and `config_json` may be null
/// for an empty dataset and the default config.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn feva_session_new(
    project_json: *const c_char,
    dataset_json: *const c_char,
    config_json: *const c_char,
    out: *mut *mut FevaSession,
) -> FevaStatus {
    guard(|| {
        let project = parse_project(required(project_json, "project_json")?)?;
        let dataset = parse_dataset(optional(dataset_json, "dataset_json")?)?;
        let config = parse_config(optional(config_json, "config_json")?)?;
        if out.is_null() {
            return Err(fail(FevaStatus::NullArgument, "null_argument", "`out` is null"));
        }
        let inner = Session::new(&project, dataset, config)?;
        write(out, Box::into_raw(Box::new(FevaSession { inner })), "out")
    })
}

/// Frees a session. Null is ignored.
///
/// # Safety
/// `s` must be null or a handle from [`feva_session_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn feva_session_free(s: *mut FevaSession) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Presses a key chord such as `space` or `ctrl+z`. When `event_json` is not
/// null it receives the resulting event as JSON.
///
/// # Safety
/// `s` must be a live handle; `chord` NUL-terminated; `event_json` null or writable.
#[no_mangle]
pub unsafe extern "C" fn feva_session_key(
    s: *mut FevaSession,
    chord: *const c_char,
    event_json: *mut *mut c_char,
) -> FevaStatus {
    guard(|| {
        let s = session(s)?;
        let chord = required(chord, "chord")?;
        let action = s
            .inner
            .config()
            .keymap
            .resolve(chord)
            .ok_or_else(|| Error::UnboundChord(chord.to_string()))?;
        let event = s.inner.apply(action)?;
        if !event_json.is_null() {
            write_string(event_json, to_json(&event), "event_json")?;
        }
        Ok(())
    })
}

/// Performs a named action (`play_pause`, `mark`, `undo`, ...) regardless of bindings.
///
/// # Safety
/// As for [`feva_session_key`].
#[no_mangle]
pub unsafe extern "C" fn feva_session_action(
    s: *mut FevaSession,
    action: *const c_char,
    event_json: *mut *mut c_char,
) -> FevaStatus {
    guard(|| {
        let s = session(s)?;
        let action: Action = required(action, "action")?
            .parse()
            .map_err(|e: Error| fail(FevaStatus::NotFound, "unknown_action", e.to_string()))?;
        let event = s.inner.apply(action)?;
        if !event_json.is_null() {
            write_string(event_json, to_json(&event), "event_json")?;
        }
        Ok(())
    })
}

/// Advances the playhead by `wall_us` microseconds of wall-clock time.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn feva_session_advance(s: *mut FevaSession, wall_us: u64) -> FevaStatus {
    guard(|| {
        session(s)?.inner.advance(wall_us);
        Ok(())
    })
}

/// Moves the playhead, clamped to the video.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn feva_session_seek(s: *mut FevaSession, t_us: u64) -> FevaStatus {
    guard(|| {
        session(s)?.inner.seek(TimePoint(t_us));
        Ok(())
    })
}

/// Selects a label by id.
///
/// # Safety
/// `s` must be a live handle; `label_id` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn feva_session_select(s: *mut FevaSession, label_id: *const c_char) -> FevaStatus {
    guard(|| {
        let s = session(s)?;
        s.inner.select_label(required(label_id, "label_id")?)?;
        Ok(())
    })
}

/// # Safety
/// `s` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn feva_session_position(s: *mut FevaSession, out: *mut u64) -> FevaStatus {
    guard(|| write(out, session(s)?.inner.transport().position().0, "out"))
}

/// # Safety
/// `s` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn feva_session_playing(s: *mut FevaSession, out: *mut bool) -> FevaStatus {
    guard(|| write(out, session(s)?.inner.transport().playing(), "out"))
}

/// The current dataset as a native document.
///
/// # Safety
/// `s` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn feva_session_dataset_json(s: *mut FevaSession, out: *mut *mut c_char) -> FevaStatus {
    guard(|| {
        let bytes = save_dataset(session(s)?.inner.dataset());
        write_string(out, String::from_utf8(bytes).expect("json is utf-8"), "out")
    })
}

fn frame_rate(num: u32, den: u32) -> Result<FrameRate, Failure> {
    Ok(FrameRate::new(num, den)?)
}

/// Nearest frame boundary to `t_us` at `num/den` frames per second.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn feva_snap_to_frame(t_us: u64, num: u32, den: u32, out: *mut u64) -> FevaStatus {
    guard(|| write(out, feva_core::snap_to_frame(TimePoint(t_us), frame_rate(num, den)?).0, "out"))
}

/// Moves `t_us` by `delta_frames` frames, clamped to `[0, duration_us]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn feva_frame_step(
    t_us: u64,
    num: u32,
    den: u32,
    delta_frames: i64,
    duration_us: u64,
    out: *mut u64,
) -> FevaStatus {
    guard(|| {
        let fps = frame_rate(num, den)?;
        let t = feva_core::frame_step(TimePoint(t_us), fps, delta_frames, TimePoint(duration_us));
        write(out, t.0, "out")
    })
}

/// SubRip captions for a native dataset. Pass `UINT64_MAX` as `video_end_us`
/// to leave caption ends unclamped.
///
/// # Safety
/// `dataset_json` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn feva_export_srt(
    dataset_json: *const c_char,
    min_display_us: u64,
    video_end_us: u64,
    out: *mut *mut c_char,
) -> FevaStatus {
    guard(|| {
        let d = load_dataset(required(dataset_json, "dataset_json")?.as_bytes())?;
        let opts = SrtOptions {
            min_display: min_display_us,
            video_end: (video_end_us != u64::MAX).then_some(TimePoint(video_end_us)),
            track_ids: None,
        };
        write_string(out, export_srt(&d, &opts), "out")
    })
}

/// Converts a VIA project to a native dataset. When `warnings_json` is not
/// null it receives the import warnings as a JSON array of strings.
///
/// # Safety
/// `via_json` NUL-terminated; `out` writable; `warnings_json` null or writable.
#[no_mangle]
pub unsafe extern "C" fn feva_import_via(
    via_json: *const c_char,
    out: *mut *mut c_char,
    warnings_json: *mut *mut c_char,
) -> FevaStatus {
    guard(|| {
        let imported = import_via(required(via_json, "via_json")?.as_bytes())?;
        let doc = String::from_utf8(save_dataset(&imported.dataset)).expect("json is utf-8");
        if out.is_null() {
            return Err(fail(FevaStatus::NullArgument, "null_argument", "`out` is null"));
        }
        if !warnings_json.is_null() {
            write_string(warnings_json, to_json(&imported.warnings), "warnings_json")?;
        }
        write_string(out, doc, "out")
    })
}

/// Replays an interaction script and returns a JSON report with the input
/// count, the event log and the final dataset.
///
/// # Safety
/// String arguments must be null (where optional) or NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn feva_replay(
    script: *const c_char,
    project_json: *const c_char,
    dataset_json: *const c_char,
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> FevaStatus {
    guard(|| {
        let script: InteractionScript = required(script, "script")?.parse()?;
        let project = parse_project(required(project_json, "project_json")?)?;
        let dataset = parse_dataset(optional(dataset_json, "dataset_json")?)?;
        let config = parse_config(optional(config_json, "config_json")?)?;
        let outcome = replay_script(&script, &project, dataset, config)?;
        write_string(out, to_json(&outcome), "out")
    })
}

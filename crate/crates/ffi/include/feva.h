#ifndef FEVA_H
#define FEVA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  FEVA_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  FEVA_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  FEVA_STATUS_INVALID_UTF8 = 2,
  /**
   * A document, config or script could not be parsed.
   */
  FEVA_STATUS_MALFORMED = 3,
  /**
   * Well-formed input that breaks a rule (interval, reference, frame rate, ...).
   */
  FEVA_STATUS_INVALID = 4,
  /**
   * A referenced label, track, type or target does not exist.
   */
  FEVA_STATUS_NOT_FOUND = 5,
  /**
   * The key chord has no binding.
   */
  FEVA_STATUS_UNBOUND_CHORD = 6,
  /**
   * Undo or redo with an empty history.
   */
  FEVA_STATUS_EMPTY_HISTORY = 7,
  /**
   * The engine panicked; the handle should be freed.
   */
  FEVA_STATUS_PANIC = 99,
} FevaStatus;

/**
 * An interactive annotation session.
 */
typedef struct FevaSession FevaSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static string.
 */
const char *feva_version(void);

/**
 * Stable snake_case code of the calling thread's last error, or null.
 * Valid until the next failing call on this thread.
 */
const char *feva_last_error_code(void);

/**
 * Human-readable message of the calling thread's last error, or null.
 * Valid until the next failing call on this thread.
 */
const char *feva_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void feva_string_free(char *s);

/**
 * Opens a session on a project. `dataset_json` and `config_json` may be null
 * for an empty dataset and the default config.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
FevaStatus feva_session_new(const char *project_json,
                            const char *dataset_json,
                            const char *config_json,
                            FevaSession **out);

/**
 * Frees a session. Null is ignored.
 *
 * # Safety
 * `s` must be null or a handle from [`feva_session_new`] not yet freed.
 */
void feva_session_free(FevaSession *s);

/**
 * Presses a key chord such as `space` or `ctrl+z`. When `event_json` is not
 * null it receives the resulting event as JSON.
 *
 * # Safety
 * `s` must be a live handle; `chord` NUL-terminated; `event_json` null or writable.
 */
FevaStatus feva_session_key(FevaSession *s, const char *chord, char **event_json);

/**
 * Performs a named action (`play_pause`, `mark`, `undo`, ...) regardless of bindings.
 *
 * # Safety
 * As for [`feva_session_key`].
 */
FevaStatus feva_session_action(FevaSession *s, const char *action, char **event_json);

/**
 * Advances the playhead by `wall_us` microseconds of wall-clock time.
 *
 * # Safety
 * `s` must be a live handle.
 */
FevaStatus feva_session_advance(FevaSession *s, uint64_t wall_us);

/**
 * Moves the playhead, clamped to the video.
 *
 * # Safety
 * `s` must be a live handle.
 */
FevaStatus feva_session_seek(FevaSession *s, uint64_t t_us);

/**
 * Selects a label by id.
 *
 * # Safety
 * `s` must be a live handle; `label_id` NUL-terminated.
 */
FevaStatus feva_session_select(FevaSession *s, const char *label_id);

/**
 * # Safety
 * `s` must be a live handle; `out` writable.
 */
FevaStatus feva_session_position(FevaSession *s, uint64_t *out);

/**
 * # Safety
 * `s` must be a live handle; `out` writable.
 */
FevaStatus feva_session_playing(FevaSession *s, bool *out);

/**
 * The current dataset as a native document.
 *
 * # Safety
 * `s` must be a live handle; `out` writable.
 */
FevaStatus feva_session_dataset_json(FevaSession *s, char **out);

/**
 * Nearest frame boundary to `t_us` at `num/den` frames per second.
 *
 * # Safety
 * `out` must be writable.
 */
FevaStatus feva_snap_to_frame(uint64_t t_us, uint32_t num, uint32_t den, uint64_t *out);

/**
 * Moves `t_us` by `delta_frames` frames, clamped to `[0, duration_us]`.
 *
 * # Safety
 * `out` must be writable.
 */
FevaStatus feva_frame_step(uint64_t t_us,
                           uint32_t num,
                           uint32_t den,
                           int64_t delta_frames,
                           uint64_t duration_us,
                           uint64_t *out);

/**
 * SubRip captions for a native dataset. Pass `UINT64_MAX` as `video_end_us`
 * to leave caption ends unclamped.
 *
 * # Safety
 * `dataset_json` NUL-terminated; `out` writable.
 */
FevaStatus feva_export_srt(const char *dataset_json,
                           uint64_t min_display_us,
                           uint64_t video_end_us,
                           char **out);

/**
 * Converts a VIA project to a native dataset. When `warnings_json` is not
 * null it receives the import warnings as a JSON array of strings.
 *
 * # Safety
 * `via_json` NUL-terminated; `out` writable; `warnings_json` null or writable.
 */
FevaStatus feva_import_via(const char *via_json, char **out, char **warnings_json);

/**
 * Replays an interaction script and returns a JSON report with the input
 * count, the event log and the final dataset.
 *
 * # Safety
 * String arguments must be null (where optional) or NUL-terminated; `out` writable.
 */
FevaStatus feva_replay(const char *script,
                       const char *project_json,
                       const char *dataset_json,
                       const char *config_json,
                       char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FEVA_H */

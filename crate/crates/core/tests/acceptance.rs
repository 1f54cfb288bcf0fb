//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::http::StatusCode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use common::{create, media_bytes, TestServer};
use feva_core::model::{AttrValue, SpatialPayload};
use feva_core::persistence::{export_srt, load_dataset, save_dataset, SrtOptions};
use feva_core::replay::{replay_on, replay_script, InteractionScript};
use feva_core::{
    apply_edit, assign_lanes, fine_tune, load_config, max_overlap_depth, pack_lanes,
    validate_dataset, Config, Dataset, Edge, Edit, FrameRate, History, Label, LabelDraft,
    LabelType, Project, Session, TimePoint, Track,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn project() -> Project {
    serde_json::from_slice(&fs::read(fixture("project.json")).unwrap()).unwrap()
}

fn script(name: &str) -> InteractionScript {
    fs::read_to_string(fixture(&format!("scripts/{name}")))
        .unwrap()
        .parse()
        .unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---- speed label ----

fn speed_label() -> Outcome {
    let started = Instant::now();
    let config = load_config(&fs::read(fixture("config_reaction_300ms.json")).unwrap())
        .map_err(|e| e.to_string())?;
    ensure!(
        config.reaction.delta_r == 300_000,
        "fixture Δr is {}",
        config.reaction.delta_r
    );
    let text = "key space\nwait 5000000\nkey a\nwait 3000000\nkey a\n";
    let s: InteractionScript = text.parse().map_err(|e: feva_core::Error| e.to_string())?;
    let out = replay_script(&s, &project(), Dataset::with_defaults(), config)
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let spans: Vec<(u64, u64)> = out
        .final_dataset
        .labels
        .iter()
        .map(|l| (l.start.0, l.end.0))
        .collect();
    ensure!(spans == [(4_700_000, 7_700_000)], "labels {spans:?}");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("[4700000, 7700000] in {elapsed:?}"))
}

// ---- interaction counts ----

#[derive(serde::Deserialize)]
struct Task {
    task: String,
    setup: Option<String>,
    script: String,
    inputs: usize,
}

fn interaction_counts() -> Outcome {
    let expected = BTreeMap::from([
        ("single_label", 2),
        ("play_pause", 1),
        ("undo_redo", 2),
        ("navigate", 1),
    ]);
    let tasks: Vec<Task> =
        serde_json::from_slice(&fs::read(fixture("scripts/corpus.json")).unwrap()).unwrap();
    let mut got = BTreeMap::new();
    for t in &tasks {
        let mut s = Session::new(&project(), Dataset::with_defaults(), Config::default())
            .map_err(|e| e.to_string())?;
        if let Some(setup) = &t.setup {
            replay_on(&mut s, &script(setup)).map_err(|e| e.to_string())?;
        }
        let task = script(&t.script);
        replay_on(&mut s, &task).map_err(|e| format!("{}: {e}", t.task))?;
        ensure!(
            task.input_count() == t.inputs,
            "{}: corpus lists {} inputs",
            t.task,
            t.inputs
        );
        got.insert(t.task.as_str(), task.input_count());
    }
    ensure!(got == expected, "counts {got:?}");
    Ok(format!("{got:?}"))
}

// ---- lanes ----

/// Whether two labels may not share a lane, from the half-open overlap rule.
fn conflict(a: (u64, u64), b: (u64, u64)) -> bool {
    let proper = |x: (u64, u64)| x.0 < x.1;
    match (proper(a), proper(b)) {
        (true, true) => a.0 < b.1 && b.0 < a.1,
        (true, false) => a.0 < b.0 && b.0 < a.1,
        (false, true) => b.0 < a.0 && a.0 < b.1,
        (false, false) => false,
    }
}

/// Largest clique of the conflict graph, probing at each time in `xs`.
/// Conflict sets of intervals are witnessed at an endpoint `x` (a point
/// there plus intervals strictly containing it) or just after one
/// (intervals covering `[x, x+1)`).
fn clique_oracle(spans: &[(u64, u64)], xs: impl IntoIterator<Item = u64>) -> usize {
    let mut best = 0;
    for x in xs {
        let (mut inside, mut point, mut after) = (0, 0, 0);
        for &(s, e) in spans {
            inside += (s < x && x < e) as usize;
            point |= (s == e && s == x) as usize;
            after += (s <= x && x < e) as usize;
        }
        best = best.max(inside + point).max(after);
    }
    best
}

fn check_packing(
    spans: &[(u64, u64)],
    lanes: &[usize],
    count: usize,
    oracle: usize,
) -> Result<(), String> {
    ensure!(count == oracle, "{spans:?}: {count} lanes, oracle {oracle}");
    ensure!(
        lanes.iter().all(|&l| l < count),
        "{spans:?}: lane out of range"
    );
    for i in 0..spans.len() {
        for j in i + 1..spans.len() {
            ensure!(
                lanes[i] != lanes[j] || !conflict(spans[i], spans[j]),
                "{spans:?}: {:?} and {:?} share lane {}",
                spans[i],
                spans[j],
                lanes[i]
            );
        }
    }
    Ok(())
}

fn as_times(spans: &[(u64, u64)]) -> Vec<(TimePoint, TimePoint)> {
    spans
        .iter()
        .map(|&(s, e)| (TimePoint(s), TimePoint(e)))
        .collect()
}

const GRID: u64 = 6;
const MAX_EXHAUSTIVE: usize = 8;

fn walk(
    from: usize,
    intervals: &[(u64, u64)],
    stack: &mut Vec<(u64, u64)>,
    count: &mut u64,
) -> Result<(), String> {
    let times = as_times(stack);
    let (lanes, lane_count) = pack_lanes(&times);
    let depth = max_overlap_depth(times.iter().map(|&(s, e)| ("", s, e)));
    let oracle = clique_oracle(stack, 0..=GRID);
    ensure!(depth == oracle, "{stack:?}: depth {depth}, oracle {oracle}");
    check_packing(stack, &lanes, lane_count, oracle)?;
    *count += 1;
    if stack.len() == MAX_EXHAUSTIVE {
        return Ok(());
    }
    for k in from..intervals.len() {
        stack.push(intervals[k]);
        walk(k, intervals, stack, count)?;
        stack.pop();
    }
    Ok(())
}

fn lane_optimality() -> Outcome {
    let started = Instant::now();
    let intervals: Vec<(u64, u64)> = (0..=GRID)
        .flat_map(|s| (s..=GRID).map(move |e| (s, e)))
        .collect();
    let mut exhaustive = 0u64;
    walk(
        0,
        &intervals,
        &mut Vec::with_capacity(MAX_EXHAUSTIVE),
        &mut exhaustive,
    )?;

    let ids: Vec<String> = (0..200).map(|i| format!("l{i}")).collect();
    let mut r = rng(0x1a9e5);
    for case in 0..10_000 {
        let n = r.random_range(0..=200);
        let horizon = [10, 1_000, 1_000_000][case % 3];
        let spans: Vec<(u64, u64)> = (0..n)
            .map(|_| {
                let s = r.random_range(0..=horizon);
                let len = if r.random_bool(0.1) {
                    0
                } else {
                    r.random_range(0..=horizon / 5)
                };
                (s, (s + len).min(horizon))
            })
            .collect();
        let mut xs: Vec<u64> = spans.iter().flat_map(|&(s, e)| [s, e]).collect();
        xs.sort_unstable();
        xs.dedup();
        let oracle = clique_oracle(&spans, xs);
        let view = || {
            spans
                .iter()
                .zip(&ids)
                .map(|(&(s, e), id)| (id.as_str(), TimePoint(s), TimePoint(e)))
        };
        let a = assign_lanes(view());
        let depth = max_overlap_depth(view());
        ensure!(
            depth == oracle,
            "case {case}: depth {depth}, oracle {oracle}"
        );
        let lanes: Vec<usize> = ids[..n].iter().map(|id| a.lanes[id]).collect();
        check_packing(&spans, &lanes, a.lane_count, oracle)
            .map_err(|e| format!("case {case}: {e}"))?;
        ensure!(
            pack_lanes(&as_times(&spans)).1 == a.lane_count,
            "case {case}: packings disagree"
        );
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "{exhaustive} exhaustive sets + 10000 random in {elapsed:.2?}"
    ))
}

// ---- undo/redo ----

const DURATION: TimePoint = TimePoint(60_000_000);

fn pick<'a, T>(r: &mut ChaCha8Rng, v: &'a [T]) -> &'a T {
    &v[r.random_range(0..v.len())]
}

fn random_text(r: &mut ChaCha8Rng) -> String {
    const WORDS: &[&str] = &[
        "jump", "trip", "12", "-->", "Größe", "跳绳", "a,b", "\"q\"", "🙂", "<i>x</i>", "1",
    ];
    let lines = r.random_range(1..=3);
    (0..lines)
        .map(|_| {
            let n = r.random_range(1..=4);
            (0..n)
                .map(|_| *pick(r, WORDS))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn random_attr(r: &mut ChaCha8Rng) -> AttrValue {
    match r.random_range(0..3) {
        0 => AttrValue::Number(r.random_range(-1e6..1e6)),
        1 => AttrValue::Number(r.random_range(0..10) as f64),
        _ => AttrValue::Text(random_text(r)),
    }
}

fn random_spatial(r: &mut ChaCha8Rng) -> SpatialPayload {
    match r.random_range(0..3) {
        0 => SpatialPayload::None,
        1 => SpatialPayload::Point(r.random::<f64>(), r.random::<f64>()),
        _ => {
            let (x, y) = (r.random_range(0.0..0.5), r.random_range(0.0..0.5));
            SpatialPayload::Bbox(x, y, r.random_range(0.0..0.5), r.random_range(0.0..0.5))
        }
    }
}

fn random_span(r: &mut ChaCha8Rng, duration: TimePoint) -> (TimePoint, TimePoint) {
    let s = r.random_range(0..=duration.0);
    let e = if r.random_bool(0.15) {
        s
    } else {
        r.random_range(s..=duration.0)
    };
    (TimePoint(s), TimePoint(e))
}

fn random_edit(r: &mut ChaCha8Rng, d: &Dataset) -> Edit {
    let track_ids: Vec<&str> = d.tracks.iter().map(|t| t.id.as_str()).collect();
    let type_ids: Vec<&str> = d.types.iter().map(|t| t.id.as_str()).collect();
    if d.labels.is_empty() || r.random_bool(0.25) {
        let (start, end) = random_span(r, DURATION);
        let mut label = LabelDraft::new(*pick(r, &track_ids), *pick(r, &type_ids), start, end);
        if r.random_bool(0.5) {
            label.text = random_text(r);
        }
        label.spatial = random_spatial(r);
        if r.random_bool(0.3) {
            label.attributes.insert("rating".into(), random_attr(r));
        }
        let index = r
            .random_bool(0.5)
            .then(|| r.random_range(0..=d.labels.len()));
        return Edit::Create { label, index };
    }
    let l = pick(r, &d.labels);
    let id = l.id.clone();
    match r.random_range(0..8) {
        0 => Edit::Delete { id },
        1 => Edit::Move {
            id,
            delta: r.random_range(-70_000_000..70_000_000),
        },
        2 => Edit::Resize {
            id,
            edge: Edge::Start,
            time: TimePoint(r.random_range(0..=l.end.0)),
        },
        3 => Edit::Resize {
            id,
            edge: Edge::End,
            time: TimePoint(r.random_range(l.start.0..=DURATION.0)),
        },
        4 => Edit::SetText {
            id,
            text: random_text(r),
        },
        5 => Edit::SetType {
            id,
            type_id: pick(r, &type_ids).to_string(),
        },
        6 => Edit::SetTrack {
            id,
            track_id: pick(r, &track_ids).to_string(),
        },
        _ => {
            let key = pick(r, &["rating", "note", "hands"]).to_string();
            let value = r.random_bool(0.7).then(|| random_attr(r));
            Edit::SetAttr { id, key, value }
        }
    }
}

fn random_dataset(r: &mut ChaCha8Rng, labels: usize, duration: TimePoint) -> Dataset {
    let mut d = Dataset::empty();
    d.revision = r.random_range(0..1_000_000);
    for i in 0..r.random_range(1..=4) {
        let mut t = Track::new(format!("t{i}"), format!("Track {i}"));
        t.visible = r.random_bool(0.8);
        d.tracks.push(t);
    }
    for i in 0..r.random_range(1..=4) {
        d.types.push(LabelType {
            id: format!("ty{i}"),
            name: random_text(r).replace('\n', " "),
            color: format!("#{:06x}", r.random_range(0..0x100_0000)),
        });
    }
    for i in 0..labels {
        let (start, end) = random_span(r, duration);
        let track = pick(r, &d.tracks).id.clone();
        let ty = pick(r, &d.types).id.clone();
        let mut l = Label::new(format!("L{}", i + 1), track, ty, start, end);
        if r.random_bool(0.6) {
            l.text = random_text(r);
        }
        l.spatial = random_spatial(r);
        for key in ["rating", "note"] {
            if r.random_bool(0.3) {
                l.attributes.insert(key.into(), random_attr(r));
            }
        }
        if r.random_bool(0.05) {
            l.extra.insert(
                "reviewed_by".into(),
                json!({"who": random_text(r), "score": r.random::<f64>()}),
            );
        }
        d.labels.push(l);
    }
    if r.random_bool(0.5) {
        d.extra.insert(
            "session_notes".into(),
            json!([random_text(r), r.random_range(0..u64::MAX)]),
        );
    }
    d
}

fn without_revision(d: &Dataset) -> Dataset {
    Dataset {
        revision: 0,
        ..d.clone()
    }
}

fn undo_redo() -> Outcome {
    let mut r = rng(0xed17);
    let mut total = 0;
    for case in 0..1000 {
        let n_labels = r.random_range(0..10);
        let initial = random_dataset(&mut r, n_labels, DURATION);
        let target = r.random_range(0..=50);
        let mut history = History::default();
        let mut d = initial.clone();
        let mut committed = 0;
        let mut attempts = 0;
        while committed < target && attempts < 500 {
            attempts += 1;
            let edit = random_edit(&mut r, &d);
            if let Ok(next) = history.commit(&d, &edit, DURATION) {
                d = next;
                committed += 1;
            }
        }
        ensure!(
            committed == target,
            "case {case}: only {committed} of {target} edits applied"
        );
        total += committed;
        let last = d.clone();
        for _ in 0..committed {
            d = history
                .undo(&d, DURATION)
                .map_err(|e| format!("case {case}: undo: {e}"))?;
        }
        ensure!(!history.can_undo(), "case {case}: history not exhausted");
        ensure!(
            without_revision(&d) == without_revision(&initial),
            "case {case}: undo did not restore"
        );
        ensure!(
            d.revision == initial.revision + 2 * committed as u64,
            "case {case}: revision {}",
            d.revision
        );
        for _ in 0..committed {
            d = history
                .redo(&d, DURATION)
                .map_err(|e| format!("case {case}: redo: {e}"))?;
        }
        ensure!(!history.can_redo(), "case {case}: redo stack not exhausted");
        ensure!(
            without_revision(&d) == without_revision(&last),
            "case {case}: redo did not restore"
        );
    }
    Ok(format!("1000 sequences, {total} edits"))
}

// ---- persistence ----

fn persistence() -> Outcome {
    let mut r = rng(0x5a7e);
    let mut labels = 0;
    for case in 0..100 {
        let n = match case {
            0 => 0,
            1 => 10_000,
            _ => r.random_range(0..=10_000),
        };
        let duration = TimePoint(r.random_range(0..u64::MAX / 4));
        let d = random_dataset(&mut r, n, duration);
        ensure!(
            validate_dataset(&d).is_empty(),
            "case {case}: generator produced an invalid dataset"
        );
        let bytes = save_dataset(&d);
        let back = load_dataset(&bytes).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(back == d, "case {case}: load(save(d)) != d");
        ensure!(save_dataset(&back) == bytes, "case {case}: re-save differs");
        labels += n;
    }
    Ok(format!("100 datasets, {labels} labels"))
}

// ---- SRT ----

struct Cue {
    index: usize,
    start_ms: u64,
    end_ms: u64,
    text: String,
}

fn parse_timecode(s: &str) -> Option<u64> {
    let (hms, ms) = s.split_once(',')?;
    let parts: Vec<u64> = hms
        .split(':')
        .map(|p| p.parse().ok())
        .collect::<Option<_>>()?;
    let [h, m, sec] = parts[..] else { return None };
    if ms.len() != 3 || m > 59 || sec > 59 {
        return None;
    }
    Some(((h * 60 + m) * 60 + sec) * 1000 + ms.parse::<u64>().ok()?)
}

fn parse_srt(text: &str) -> Result<Vec<Cue>, String> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let body = text.strip_suffix('\n').ok_or("missing final newline")?;
    body.split("\n\n")
        .map(|block| {
            let mut lines = block.lines();
            let index = lines
                .next()
                .and_then(|l| l.parse().ok())
                .ok_or(format!("bad index in {block:?}"))?;
            let timing = lines.next().ok_or(format!("no timing in {block:?}"))?;
            let (a, b) = timing
                .split_once(" --> ")
                .ok_or(format!("bad timing {timing:?}"))?;
            let text = lines.collect::<Vec<_>>().join("\n");
            Ok(Cue {
                index,
                start_ms: parse_timecode(a).ok_or(format!("bad timecode {a:?}"))?,
                end_ms: parse_timecode(b).ok_or(format!("bad timecode {b:?}"))?,
                text,
            })
        })
        .collect()
}

fn srt() -> Outcome {
    let mut r = rng(0x5e7);
    let mut cues = 0;
    for case in 0..200 {
        let duration = TimePoint(r.random_range(1..20_000_000_000));
        let n = r.random_range(0..200);
        let mut d = random_dataset(&mut r, n, duration);
        for l in d.labels.iter_mut().filter(|_| r.random_bool(0.2)) {
            l.text.clear();
        }
        let opts = SrtOptions {
            min_display: r.random_range(1..2_000_000),
            video_end: r.random_bool(0.5).then_some(duration),
            track_ids: None,
        };
        let parsed = parse_srt(&export_srt(&d, &opts)).map_err(|e| format!("case {case}: {e}"))?;

        let mut expected: Vec<&Label> = d.labels.iter().collect();
        expected.sort_by(|a, b| (a.start, a.end, &a.id).cmp(&(b.start, b.end, &b.id)));
        ensure!(
            parsed.len() == expected.len(),
            "case {case}: {} cues for {} labels",
            parsed.len(),
            expected.len()
        );
        for (i, (cue, l)) in parsed.iter().zip(&expected).enumerate() {
            let mut end = if l.start == l.end {
                l.start.0 + opts.min_display
            } else {
                l.end.0
            };
            if let Some(v) = opts.video_end {
                end = end.min(v.0.max(l.start.0));
            }
            let text = if l.text.is_empty() {
                d.label_type(&l.type_id).unwrap().name.clone()
            } else {
                l.text.clone()
            };
            ensure!(
                cue.index == i + 1,
                "case {case}: cue numbered {}",
                cue.index
            );
            ensure!(
                (cue.start_ms * 1000).abs_diff(l.start.0) <= 1000,
                "case {case} {}: start {} ms vs {} µs",
                l.id,
                cue.start_ms,
                l.start.0
            );
            ensure!(
                (cue.end_ms * 1000).abs_diff(end) <= 1000,
                "case {case} {}: end {} ms vs {end} µs",
                l.id,
                cue.end_ms
            );
            ensure!(
                cue.text == text,
                "case {case} {}: text {:?} vs {text:?}",
                l.id,
                cue.text
            );
        }
        cues += parsed.len();
    }
    Ok(format!("200 exports, {cues} cues"))
}

// ---- frames ----

const RATES: [(u32, u32); 5] = [(24, 1), (25, 1), (30, 1), (30000, 1001), (60, 1)];

fn frames() -> Outcome {
    let mut r = rng(0xf4a3e);
    for (num, den) in RATES {
        let fps = FrameRate::new(num, den).map_err(|e| e.to_string())?;
        for i in 0..1_000_000u64 {
            let t = fps.frame_to_time(i);
            let exact = (2 * i as u128 * den as u128 * 1_000_000 + num as u128) / (2 * num as u128);
            ensure!(
                t.0 as u128 == exact,
                "{num}/{den}: frame {i} at {} µs, expected {exact}",
                t.0
            );
            ensure!(
                fps.frame_index(t) == i,
                "{num}/{den}: frame {i} -> {} -> {}",
                t.0,
                fps.frame_index(t)
            );
        }

        let last = 600 * num as u64 / den as u64;
        let duration = fps.frame_to_time(last);
        for _ in 0..10_000 {
            let fs = r.random_range(1..last - 3);
            let fe = r.random_range(fs + 2..last);
            let mut d = Dataset::with_defaults();
            let l = Label::new(
                "x",
                "track-1",
                "event",
                fps.frame_to_time(fs),
                fps.frame_to_time(fe),
            );
            d.labels.push(l.clone());
            for edge in [Edge::Start, Edge::End] {
                for dir in [1i64, -1] {
                    let there = step(&d, edge, dir, fps, duration)?;
                    let moved = there.label("x").unwrap();
                    let (before, after) = match edge {
                        Edge::Start => (fs, fps.frame_index(moved.start)),
                        Edge::End => (fe, fps.frame_index(moved.end)),
                    };
                    ensure!(
                        after as i64 == before as i64 + dir,
                        "{num}/{den}: {edge:?} {dir:+} from frame {before} gave {after}"
                    );
                    let back = step(&there, edge, -dir, fps, duration)?;
                    ensure!(
                        back.label("x") == Some(&l),
                        "{num}/{den}: {edge:?} {dir:+} from {fs}..{fe} did not return"
                    );
                }
            }
        }
    }
    Ok("5 rates × 10^6 frames, 4 × 10^4 fine-tunes each".into())
}

fn step(
    d: &Dataset,
    edge: Edge,
    dir: i64,
    fps: FrameRate,
    duration: TimePoint,
) -> Result<Dataset, String> {
    let e = fine_tune(d, "x", edge, dir, fps, duration).map_err(|e| e.to_string())?;
    Ok(apply_edit(d, &e, duration)
        .map_err(|e| e.to_string())?
        .dataset)
}

// ---- HTTP ----

fn http() -> Outcome {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(4)
        .enable_all()
        .build()
        .unwrap();
    rt.block_on(http_checks())
}

async fn http_checks() -> Outcome {
    let size = 1_048_583;
    let s = Arc::new(TestServer::start(size, None).await);
    let bytes = media_bytes(size, 7);
    let mut r = rng(0x4a7);
    for _ in 0..20 {
        let mut got = Vec::with_capacity(size);
        let mut at = 0;
        while at < size {
            let end = (at + r.random_range(1..200_000)).min(size - 1);
            let reply = s.range("/media/front", &format!("bytes={at}-{end}")).await;
            ensure!(
                reply.status == StatusCode::PARTIAL_CONTENT,
                "bytes={at}-{end}: {}",
                reply.status
            );
            ensure!(
                reply.header("content-range") == Some(&format!("bytes {at}-{end}/{size}")),
                "content-range {:?}",
                reply.header("content-range")
            );
            got.extend_from_slice(&reply.body);
            at = end + 1;
        }
        ensure!(got == bytes, "reassembled body differs");
    }

    for bad in [
        format!("bytes={size}-"),
        format!("bytes={}-{}", size + 10, size + 20),
        "bytes=-0".into(),
    ] {
        let reply = s.range("/media/front", &bad).await;
        ensure!(
            reply.status == StatusCode::RANGE_NOT_SATISFIABLE,
            "{bad}: {}",
            reply.status
        );
        ensure!(
            reply.header("content-range") == Some(&format!("bytes */{size}")),
            "{bad}: content-range"
        );
    }

    let racers: Vec<_> = (0..16u64)
        .map(|i| {
            let s = s.clone();
            tokio::spawn(async move { s.post_edits(0, json!([create(i, i + 1)])).await })
        })
        .collect();
    let (mut ok, mut stale) = (0, 0);
    for h in racers {
        let reply = h.await.unwrap();
        match reply.status {
            StatusCode::OK => ok += 1,
            StatusCode::CONFLICT => {
                ensure!(
                    reply.json() == json!({"error": "conflict", "current_revision": 1}),
                    "409 body {}",
                    reply.json()
                );
                stale += 1;
            }
            other => return Err(format!("unexpected {other}")),
        }
    }
    ensure!(
        (ok, stale) == (1, 15),
        "{ok} accepted, {stale} stale at the same base"
    );

    let workers: Vec<_> = (0..8u64)
        .map(|w| {
            let s = s.clone();
            tokio::spawn(async move {
                let mut accepted = 0u64;
                for i in 0..25u64 {
                    let base = s.get("/api/projects/demo/datasets/main").await.json()["revision"]
                        .as_u64()
                        .unwrap();
                    let t = (w * 25 + i) * 100_000;
                    let edits = json!([create(t, t + 90_000), create(t + 1, t + 2), create(t, t)]);
                    match s.post_edits(base, edits).await.status {
                        StatusCode::OK => accepted += 1,
                        StatusCode::CONFLICT => {}
                        other => panic!("unexpected {other}"),
                    }
                }
                accepted
            })
        })
        .collect();
    let mut accepted = 0;
    for h in workers {
        accepted += h.await.unwrap();
    }
    let stored = load_dataset(&fs::read(s.data_dir().join("demo/datasets/main.json")).unwrap())
        .map_err(|e| e.to_string())?;
    ensure!(
        stored.revision == 1 + accepted,
        "revision {} after {} accepted batches",
        stored.revision,
        1 + accepted
    );
    ensure!(
        stored.labels.len() as u64 == 1 + 3 * accepted,
        "{} labels",
        stored.labels.len()
    );
    Ok(format!(
        "20 partitions of {size} bytes, 416s, {} of 216 batches accepted",
        1 + accepted
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("speed-label compensation", speed_label),
        ("interaction counts", interaction_counts),
        ("lane optimality", lane_optimality),
        ("undo/redo inversion", undo_redo),
        ("persistence round-trip", persistence),
        ("srt correctness", srt),
        ("frame arithmetic", frames),
        ("http ranges and revisions", http),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} ({:.2?})", started.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

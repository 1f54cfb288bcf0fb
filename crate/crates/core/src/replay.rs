//! Line-oriented interaction scripts replayed against a headless [`Session`].
//!
//! ```text
//! # create one label while playing
//! key space
//! wait 5000000
//! key a
//! wait 3000000
//! key a
//! dblclick timeline 12000000
//! ```

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::keymap::{Chord, Config};
use crate::model::{Dataset, Project, TimePoint};
use crate::session::{Session, SessionEvent};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "ref", rename_all = "snake_case")]
pub enum Target {
    Track(String),
    Label(String),
    Timeline(TimePoint),
    Labellist(String),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Track(id) => write!(f, "track {id}"),
            Target::Label(id) => write!(f, "label {id}"),
            Target::Timeline(t) => write!(f, "timeline {}", t.0),
            Target::Labellist(id) => write!(f, "labellist {id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "input", content = "arg", rename_all = "snake_case")]
pub enum InputEvent {
    Key(Chord),
    Click(Target),
    Dblclick(Target),
    Scroll(i64),
    /// Wall-clock microseconds; not a user input.
    Wait(u64),
}

impl InputEvent {
    pub fn is_input(&self) -> bool {
        !matches!(self, InputEvent::Wait(_))
    }
}

impl fmt::Display for InputEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputEvent::Key(c) => write!(f, "key {c}"),
            InputEvent::Click(t) => write!(f, "click {t}"),
            InputEvent::Dblclick(t) => write!(f, "dblclick {t}"),
            InputEvent::Scroll(n) => write!(f, "scroll {n}"),
            InputEvent::Wait(us) => write!(f, "wait {us}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InteractionScript {
    pub steps: Vec<InputEvent>,
}

impl InteractionScript {
    /// Number of user inputs: every step except `wait`.
    pub fn input_count(&self) -> usize {
        self.steps.iter().filter(|s| s.is_input()).count()
    }
}

impl fmt::Display for InteractionScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.steps.iter().try_for_each(|s| writeln!(f, "{s}"))
    }
}

fn parse_target(line: usize, words: &[&str]) -> Result<Target> {
    let syntax = |message: String| Error::ScriptSyntax { line, message };
    let [kind, arg] = words else {
        return Err(syntax(
            "expected `<track|label|timeline|labellist> <ref>`".into(),
        ));
    };
    Ok(match *kind {
        "track" => Target::Track(arg.to_string()),
        "label" => Target::Label(arg.to_string()),
        "labellist" => Target::Labellist(arg.to_string()),
        "timeline" => Target::Timeline(TimePoint(
            arg.parse()
                .map_err(|_| syntax(format!("bad timeline position `{arg}`")))?,
        )),
        other => return Err(syntax(format!("unknown target `{other}`"))),
    })
}

impl FromStr for InteractionScript {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut steps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split_once('#').map_or(raw, |(before, _)| before);
            let words: Vec<&str> = content.split_whitespace().collect();
            let Some((&verb, rest)) = words.split_first() else {
                continue;
            };
            let syntax = |message: String| Error::ScriptSyntax { line, message };
            let step = match verb {
                "key" => {
                    let [chord] = rest else {
                        return Err(syntax("expected `key <chord>`".into()));
                    };
                    InputEvent::Key(
                        chord
                            .parse()
                            .map_err(|_| syntax(format!("unknown chord `{chord}`")))?,
                    )
                }
                "click" => InputEvent::Click(parse_target(line, rest)?),
                "dblclick" => InputEvent::Dblclick(parse_target(line, rest)?),
                "scroll" | "wait" => {
                    let [n] = rest else {
                        return Err(syntax(format!("expected `{verb} <number>`")));
                    };
                    if verb == "scroll" {
                        InputEvent::Scroll(
                            n.parse()
                                .map_err(|_| syntax(format!("bad scroll amount `{n}`")))?,
                        )
                    } else {
                        InputEvent::Wait(n.parse().map_err(|_| syntax(format!("bad wait `{n}`")))?)
                    }
                }
                other => return Err(syntax(format!("unknown step `{other}`"))),
            };
            steps.push(step);
        }
        Ok(InteractionScript { steps })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogEntry {
    pub step: usize,
    pub input: String,
    /// Playhead after the step.
    pub position: TimePoint,
    #[serde(flatten)]
    pub event: SessionEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayOutcome {
    pub final_dataset: Dataset,
    pub input_count: usize,
    pub event_log: Vec<LogEntry>,
}

fn run_step(s: &mut Session, step: &InputEvent) -> Result<SessionEvent> {
    match step {
        InputEvent::Key(chord) => {
            let action = s
                .config()
                .keymap
                .resolve_chord(chord)
                .ok_or_else(|| Error::UnboundChord(chord.to_string()))?;
            s.apply(action)
        }
        InputEvent::Wait(us) => Ok(s.advance(*us)),
        InputEvent::Scroll(n) => Ok(s.scroll(*n)),
        InputEvent::Click(Target::Timeline(t)) | InputEvent::Dblclick(Target::Timeline(t)) => {
            if *t > s.transport().duration() {
                return Err(Error::UnresolvableTarget(format!(
                    "timeline {} beyond the video",
                    t.0
                )));
            }
            Ok(s.seek(*t))
        }
        InputEvent::Click(Target::Track(id)) => s.activate_track(id),
        InputEvent::Dblclick(Target::Track(id)) => s.create_at_playhead(id),
        InputEvent::Click(Target::Label(id) | Target::Labellist(id)) => s.select_label(id),
        InputEvent::Dblclick(Target::Label(id) | Target::Labellist(id)) => s.jump_to_label(id),
    }
}

fn unresolvable(e: Error) -> Error {
    match e {
        Error::LabelNotFound(id) => Error::UnresolvableTarget(format!("label {id}")),
        Error::TrackNotFound(id) => Error::UnresolvableTarget(format!("track {id}")),
        other => other,
    }
}

/// Replays `script` on an existing session and returns its log. Step
/// indices in the log and in errors count from 0 within `script`.
pub fn replay_on(session: &mut Session, script: &InteractionScript) -> Result<Vec<LogEntry>> {
    let mut event_log = Vec::with_capacity(script.steps.len());
    for (step, input) in script.steps.iter().enumerate() {
        let event = run_step(session, input).map_err(|e| Error::ScriptStep {
            step,
            source: Box::new(
                if matches!(input, InputEvent::Click(_) | InputEvent::Dblclick(_)) {
                    unresolvable(e)
                } else {
                    e
                },
            ),
        })?;
        event_log.push(LogEntry {
            step,
            input: input.to_string(),
            position: session.transport().position(),
            event,
        });
    }
    Ok(event_log)
}

/// Replays `script` from a fresh session.
pub fn replay_script(
    script: &InteractionScript,
    project: &Project,
    dataset: Dataset,
    config: Config,
) -> Result<ReplayOutcome> {
    let mut session = Session::new(project, dataset, config)?;
    let event_log = replay_on(&mut session, script)?;
    Ok(ReplayOutcome {
        input_count: script.input_count(),
        final_dataset: session.into_dataset(),
        event_log,
    })
}

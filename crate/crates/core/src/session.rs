//! One annotator's live state: dataset, history, transport and mark state,
//! driven by keymap actions and pointer gestures.

use serde::Serialize;

use crate::annotator::{
    apply_edit, fine_tune, Edge, Edit, LabelDraft, MarkOutcome, SpeedLabelState,
};
use crate::error::{Error, Result};
use crate::history::History;
use crate::keymap::{Action, Config};
use crate::model::{frame_step, validate_dataset, Dataset, Project, TimePoint};
use crate::transport::{zoom_window, Rate, TransportState};

const MIN_ZOOM_SPAN: u64 = 100_000;

/// What an action did, for event logs.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SessionEvent {
    PlayToggled {
        playing: bool,
    },
    MarkStarted {
        at: TimePoint,
    },
    LabelCreated {
        id: String,
        start: TimePoint,
        end: TimePoint,
    },
    LabelChanged {
        id: String,
        start: TimePoint,
        end: TimePoint,
    },
    LabelDeleted {
        id: String,
    },
    Undone,
    Redone,
    Seeked {
        to: TimePoint,
    },
    RateChanged {
        rate: Rate,
    },
    Zoomed {
        span: u64,
    },
    Selected {
        id: String,
    },
    TrackActivated {
        id: String,
    },
    MarkCancelled,
    SearchFocused,
    Waited {
        position: TimePoint,
    },
    /// The action had nothing to act on.
    Ignored {
        reason: &'static str,
    },
}

#[derive(Debug, Clone)]
pub struct Session {
    dataset: Dataset,
    history: History,
    transport: TransportState,
    speed: SpeedLabelState,
    config: Config,
    selected: Option<String>,
    zoom_span: u64,
}

impl Session {
    /// Starts on the project's primary source with the first track and type active.
    pub fn new(project: &Project, dataset: Dataset, config: Config) -> Result<Self> {
        project.validate()?;
        validate_dataset(&dataset).into_result()?;
        config.reaction.validate()?;
        let source = project.primary_source();
        let speed = SpeedLabelState {
            active_track_id: dataset.tracks.first().map(|t| t.id.clone()),
            active_type_id: dataset.types.first().map(|t| t.id.clone()),
            ..Default::default()
        };
        Ok(Session {
            zoom_span: config.transport.zoom_span_us.max(MIN_ZOOM_SPAN),
            transport: TransportState::new(source.duration, source.fps),
            dataset,
            history: History::default(),
            speed,
            config,
            selected: None,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn into_dataset(self) -> Dataset {
        self.dataset
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn transport(&self) -> &TransportState {
        &self.transport
    }

    pub fn speed_state(&self) -> &SpeedLabelState {
        &self.speed
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn selected(&self) -> Option<&str> {
        self.selected.as_deref()
    }

    /// The local timeline window around the playhead.
    pub fn zoom_window(&self) -> (TimePoint, TimePoint) {
        zoom_window(
            self.transport.position(),
            self.zoom_span,
            self.transport.duration(),
        )
    }

    fn duration(&self) -> TimePoint {
        self.transport.duration()
    }

    fn commit(&mut self, edit: &Edit) -> Result<Edit> {
        let applied = apply_edit(&self.dataset, edit, self.duration())?;
        self.history.record_applied(&applied);
        self.dataset = applied.dataset;
        Ok(applied.edit)
    }

    fn span_of(&self, id: &str) -> (TimePoint, TimePoint) {
        self.dataset
            .label(id)
            .map_or((TimePoint::ZERO, TimePoint::ZERO), |l| (l.start, l.end))
    }

    /// Lets `wall_us` of real time pass.
    pub fn advance(&mut self, wall_us: u64) -> SessionEvent {
        self.transport = self.transport.tick(wall_us);
        SessionEvent::Waited {
            position: self.transport.position(),
        }
    }

    pub fn seek(&mut self, t: TimePoint) -> SessionEvent {
        self.transport = self.transport.seek(t);
        SessionEvent::Seeked {
            to: self.transport.position(),
        }
    }

    /// Moves the playhead by `notches` scroll steps.
    pub fn scroll(&mut self, notches: i64) -> SessionEvent {
        let delta = notches.saturating_mul(self.config.transport.scroll_step_us as i64);
        self.transport = self.transport.seek_by(delta);
        SessionEvent::Seeked {
            to: self.transport.position(),
        }
    }

    pub fn select_label(&mut self, id: &str) -> Result<SessionEvent> {
        if self.dataset.label(id).is_none() {
            return Err(Error::LabelNotFound(id.to_string()));
        }
        self.selected = Some(id.to_string());
        Ok(SessionEvent::Selected { id: id.to_string() })
    }

    /// Selects a label and moves the playhead to its start.
    pub fn jump_to_label(&mut self, id: &str) -> Result<SessionEvent> {
        self.select_label(id)?;
        let (start, _) = self.span_of(id);
        Ok(self.seek(start))
    }

    pub fn activate_track(&mut self, id: &str) -> Result<SessionEvent> {
        if self.dataset.track(id).is_none() {
            return Err(Error::TrackNotFound(id.to_string()));
        }
        self.speed = self.speed.set_active_track(id);
        Ok(SessionEvent::TrackActivated { id: id.to_string() })
    }

    /// Creates a one-frame label on `track_id` at the playhead and selects it.
    pub fn create_at_playhead(&mut self, track_id: &str) -> Result<SessionEvent> {
        self.activate_track(track_id)?;
        let type_id = self
            .speed
            .active_type_id
            .clone()
            .ok_or(Error::NoActiveTrack)?;
        let start = self.transport.position();
        let end = TimePoint(start.0 + self.transport.fps().frame_duration()).min(self.duration());
        let edit = self.commit(&Edit::Create {
            label: LabelDraft::new(track_id, type_id, start, end),
            index: None,
        })?;
        let id = edit
            .label_id()
            .expect("created labels have ids")
            .to_string();
        self.selected = Some(id.clone());
        Ok(SessionEvent::LabelCreated { id, start, end })
    }

    pub fn apply(&mut self, action: Action) -> Result<SessionEvent> {
        let event = match action {
            Action::PlayPause => {
                self.transport = self.transport.toggle_play();
                SessionEvent::PlayToggled {
                    playing: self.transport.playing(),
                }
            }
            Action::Mark => {
                let (speed, outcome) =
                    self.speed
                        .mark(&self.transport, &self.dataset, &self.config.reaction)?;
                match outcome {
                    MarkOutcome::Started(at) => {
                        self.speed = speed;
                        SessionEvent::MarkStarted { at }
                    }
                    MarkOutcome::Finished(edit) => {
                        let edit = self.commit(&edit)?;
                        self.speed = speed;
                        let id = edit
                            .label_id()
                            .expect("created labels have ids")
                            .to_string();
                        let (start, end) = self.span_of(&id);
                        self.selected = Some(id.clone());
                        SessionEvent::LabelCreated { id, start, end }
                    }
                }
            }
            Action::Undo => match self.history.undo(&self.dataset, self.duration()) {
                Ok(d) => {
                    self.dataset = d;
                    self.drop_stale_selection();
                    SessionEvent::Undone
                }
                Err(Error::NothingToUndo) => SessionEvent::Ignored {
                    reason: "nothing_to_undo",
                },
                Err(e) => return Err(e),
            },
            Action::Redo => match self.history.redo(&self.dataset, self.duration()) {
                Ok(d) => {
                    self.dataset = d;
                    self.drop_stale_selection();
                    SessionEvent::Redone
                }
                Err(Error::NothingToRedo) => SessionEvent::Ignored {
                    reason: "nothing_to_redo",
                },
                Err(e) => return Err(e),
            },
            Action::FineTuneStartBack => self.fine_tune(Edge::Start, -1)?,
            Action::FineTuneStartFwd => self.fine_tune(Edge::Start, 1)?,
            Action::FineTuneEndBack => self.fine_tune(Edge::End, -1)?,
            Action::FineTuneEndFwd => self.fine_tune(Edge::End, 1)?,
            Action::StepBack | Action::StepFwd => {
                let delta = if action == Action::StepBack { -1 } else { 1 };
                let t = frame_step(
                    self.transport.position(),
                    self.transport.fps(),
                    delta,
                    self.duration(),
                );
                self.seek(t)
            }
            Action::BigStepBack | Action::BigStepFwd => {
                let step = self.config.transport.big_step_us as i64;
                self.transport = self.transport.seek_by(if action == Action::BigStepBack {
                    -step
                } else {
                    step
                });
                SessionEvent::Seeked {
                    to: self.transport.position(),
                }
            }
            Action::RateUp | Action::RateDown => {
                let presets = &self.config.transport.rate_presets;
                let rate = if action == Action::RateUp {
                    presets.step_up(self.transport.rate())
                } else {
                    presets.step_down(self.transport.rate())
                };
                self.transport = self.transport.set_rate(rate, presets)?;
                SessionEvent::RateChanged { rate }
            }
            Action::DeleteSelected => match self.selected.take() {
                Some(id) => {
                    self.commit(&Edit::Delete { id: id.clone() })?;
                    SessionEvent::LabelDeleted { id }
                }
                None => SessionEvent::Ignored {
                    reason: "no_selection",
                },
            },
            Action::SearchFocus => SessionEvent::SearchFocused,
            Action::ZoomIn => {
                self.zoom_span = (self.zoom_span / 2).max(MIN_ZOOM_SPAN);
                SessionEvent::Zoomed {
                    span: self.zoom_span,
                }
            }
            Action::ZoomOut => {
                self.zoom_span = self
                    .zoom_span
                    .saturating_mul(2)
                    .min(self.duration().0.max(MIN_ZOOM_SPAN));
                SessionEvent::Zoomed {
                    span: self.zoom_span,
                }
            }
            Action::CancelMark => {
                self.speed = self.speed.cancel();
                SessionEvent::MarkCancelled
            }
        };
        Ok(event)
    }

    fn fine_tune(&mut self, edge: Edge, frames: i64) -> Result<SessionEvent> {
        let Some(id) = self.selected.clone() else {
            return Ok(SessionEvent::Ignored {
                reason: "no_selection",
            });
        };
        let edit = fine_tune(
            &self.dataset,
            &id,
            edge,
            frames,
            self.transport.fps(),
            self.duration(),
        )?;
        let before = self.span_of(&id);
        let Edit::Resize { time, .. } = edit else {
            unreachable!()
        };
        let current = match edge {
            Edge::Start => before.0,
            Edge::End => before.1,
        };
        if time == current {
            return Ok(SessionEvent::Ignored { reason: "at_limit" });
        }
        self.commit(&edit)?;
        let (start, end) = self.span_of(&id);
        Ok(SessionEvent::LabelChanged { id, start, end })
    }

    fn drop_stale_selection(&mut self) {
        if self
            .selected
            .as_deref()
            .is_some_and(|id| self.dataset.label(id).is_none())
        {
            self.selected = None;
        }
    }
}

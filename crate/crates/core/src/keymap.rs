//! Key chords, bindable actions and the per-user config document.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::annotator::ReactionConfig;
use crate::error::{Error, Result};
use crate::transport::RatePresets;

/// Everything a chord can trigger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    PlayPause,
    Mark,
    Undo,
    Redo,
    FineTuneStartBack,
    FineTuneStartFwd,
    FineTuneEndBack,
    FineTuneEndFwd,
    StepBack,
    StepFwd,
    BigStepBack,
    BigStepFwd,
    RateUp,
    RateDown,
    DeleteSelected,
    SearchFocus,
    ZoomIn,
    ZoomOut,
    CancelMark,
}

impl Action {
    pub const ALL: [Action; 19] = [
        Action::PlayPause,
        Action::Mark,
        Action::Undo,
        Action::Redo,
        Action::FineTuneStartBack,
        Action::FineTuneStartFwd,
        Action::FineTuneEndBack,
        Action::FineTuneEndFwd,
        Action::StepBack,
        Action::StepFwd,
        Action::BigStepBack,
        Action::BigStepFwd,
        Action::RateUp,
        Action::RateDown,
        Action::DeleteSelected,
        Action::SearchFocus,
        Action::ZoomIn,
        Action::ZoomOut,
        Action::CancelMark,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Action::PlayPause => "play_pause",
            Action::Mark => "mark",
            Action::Undo => "undo",
            Action::Redo => "redo",
            Action::FineTuneStartBack => "fine_tune_start_back",
            Action::FineTuneStartFwd => "fine_tune_start_fwd",
            Action::FineTuneEndBack => "fine_tune_end_back",
            Action::FineTuneEndFwd => "fine_tune_end_fwd",
            Action::StepBack => "step_back",
            Action::StepFwd => "step_fwd",
            Action::BigStepBack => "big_step_back",
            Action::BigStepFwd => "big_step_fwd",
            Action::RateUp => "rate_up",
            Action::RateDown => "rate_down",
            Action::DeleteSelected => "delete_selected",
            Action::SearchFocus => "search_focus",
            Action::ZoomIn => "zoom_in",
            Action::ZoomOut => "zoom_out",
            Action::CancelMark => "cancel_mark",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Action::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::MalformedConfig(format!("unknown action `{s}`")))
    }
}

const MODIFIERS: [&str; 6] = ["ctrl", "alt", "shift", "lshift", "rshift", "meta"];

const NAMED_KEYS: [&str; 14] = [
    "space",
    "enter",
    "tab",
    "escape",
    "backspace",
    "delete",
    "insert",
    "left",
    "right",
    "up",
    "down",
    "home",
    "end",
    "plus",
];

fn canonical_modifier(m: &str) -> Option<&'static str> {
    Some(match m {
        "ctrl" | "control" => "ctrl",
        "alt" | "option" => "alt",
        "shift" => "shift",
        "lshift" | "shiftleft" => "lshift",
        "rshift" | "shiftright" => "rshift",
        "meta" | "cmd" | "super" | "win" => "meta",
        _ => return None,
    })
}

fn canonical_key(k: &str) -> Option<String> {
    let alias = match k {
        " " => "space",
        "+" => "plus",
        "esc" => "escape",
        "del" => "delete",
        "return" => "enter",
        "arrowleft" => "left",
        "arrowright" => "right",
        "arrowup" => "up",
        "arrowdown" => "down",
        "pgup" => "pageup",
        "pgdn" => "pagedown",
        other => other,
    };
    let mut chars = alias.chars();
    let single = matches!((chars.next(), chars.next()), (Some(c), None) if c.is_ascii_graphic());
    let function = alias
        .strip_prefix('f')
        .and_then(|n| n.parse::<u8>().ok())
        .is_some_and(|n| (1..=24).contains(&n));
    let other_named = matches!(alias, "pageup" | "pagedown");
    (single || function || other_named || NAMED_KEYS.contains(&alias)).then(|| alias.to_string())
}

/// A normalized key chord such as `ctrl+z` or `lshift+left`.
///
/// Modifiers come first in the fixed order `ctrl, alt, shift, lshift, rshift,
/// meta`; everything is lowercase and the `+` key is spelled `plus`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chord(String);

impl Chord {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Chord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Chord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::MalformedConfig(format!("unknown chord `{s}`"));
        let lower = match s.trim() {
            "" if !s.is_empty() => "space".to_string(),
            t => t.to_ascii_lowercase(),
        };
        let (mods, key) = if lower == "+" {
            ("", "+")
        } else if let Some(rest) = lower.strip_suffix("++") {
            (rest, "+")
        } else {
            match lower.rsplit_once('+') {
                Some((m, k)) => (m, k),
                None => ("", lower.as_str()),
            }
        };
        let key = canonical_key(key.trim()).ok_or_else(bad)?;
        let mut present = [false; MODIFIERS.len()];
        for m in mods.split('+').map(str::trim).filter(|m| !m.is_empty()) {
            let m = canonical_modifier(m).ok_or_else(bad)?;
            present[MODIFIERS.iter().position(|x| *x == m).unwrap()] = true;
        }
        let mut parts: Vec<&str> = MODIFIERS
            .iter()
            .zip(present)
            .filter(|(_, p)| *p)
            .map(|(m, _)| *m)
            .collect();
        parts.push(&key);
        Ok(Chord(parts.join("+")))
    }
}

impl Serialize for Chord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

/// Chord to action bindings. A chord maps to at most one action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Keymap {
    bindings: BTreeMap<Chord, Action>,
}

impl Default for Keymap {
    fn default() -> Self {
        Keymap::from_pairs(
            DEFAULT_BINDINGS
                .iter()
                .map(|(c, a)| (c.parse().expect("default chord"), *a)),
        )
        .expect("defaults have no duplicate chords")
    }
}

const DEFAULT_BINDINGS: [(&str, Action); 24] = [
    ("space", Action::PlayPause),
    ("a", Action::Mark),
    ("ctrl+z", Action::Undo),
    ("ctrl+y", Action::Redo),
    ("lshift+left", Action::FineTuneStartBack),
    ("lshift+right", Action::FineTuneStartFwd),
    ("rshift+left", Action::FineTuneEndBack),
    ("rshift+right", Action::FineTuneEndFwd),
    ("left", Action::StepBack),
    ("right", Action::StepFwd),
    ("ctrl+left", Action::BigStepBack),
    ("ctrl+right", Action::BigStepFwd),
    ("up", Action::RateUp),
    ("down", Action::RateDown),
    ("delete", Action::DeleteSelected),
    ("backspace", Action::DeleteSelected),
    ("ctrl+f", Action::SearchFocus),
    ("=", Action::ZoomIn),
    ("plus", Action::ZoomIn),
    ("-", Action::ZoomOut),
    ("escape", Action::CancelMark),
    ("shift+left", Action::StepBack),
    ("shift+right", Action::StepFwd),
    ("ctrl+shift+z", Action::Redo),
];

impl Keymap {
    /// Fails with `duplicate_binding` when a chord appears twice with different actions.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Chord, Action)>) -> Result<Self> {
        let mut bindings = BTreeMap::new();
        for (chord, action) in pairs {
            if let Some(first) = bindings.insert(chord.clone(), action) {
                if first != action {
                    return Err(Error::DuplicateBinding {
                        chord: chord.0,
                        first: first.name().into(),
                        second: action.name().into(),
                    });
                }
            }
        }
        Ok(Keymap { bindings })
    }

    /// Looks up a chord written in any accepted spelling; unparsable chords are unbound.
    pub fn resolve(&self, chord: &str) -> Option<Action> {
        chord.parse().ok().and_then(|c| self.resolve_chord(&c))
    }

    pub fn resolve_chord(&self, chord: &Chord) -> Option<Action> {
        self.bindings.get(chord).copied()
    }

    /// Chords for `action`, in chord order.
    pub fn chords_for(&self, action: Action) -> Vec<&Chord> {
        self.bindings
            .iter()
            .filter(|(_, a)| **a == action)
            .map(|(c, _)| c)
            .collect()
    }

    pub fn bindings(&self) -> impl Iterator<Item = (&Chord, Action)> {
        self.bindings.iter().map(|(c, a)| (c, *a))
    }

    /// Actions with no chord.
    pub fn unbound(&self) -> Vec<Action> {
        Action::ALL
            .into_iter()
            .filter(|a| self.chords_for(*a).is_empty())
            .collect()
    }

    /// Replaces the chords of each listed action, keeping defaults for the rest.
    pub fn with_overrides(&self, overrides: &BTreeMap<Action, Vec<Chord>>) -> Result<Self> {
        let kept = self
            .bindings
            .iter()
            .filter(|(_, a)| !overrides.contains_key(a))
            .map(|(c, a)| (c.clone(), *a));
        let replaced = overrides
            .iter()
            .flat_map(|(a, chords)| chords.iter().map(move |c| (c.clone(), *a)));
        Keymap::from_pairs(replaced.chain(kept))
    }

    fn sections(&self) -> BTreeMap<&'static str, Vec<&str>> {
        Action::ALL
            .into_iter()
            .map(|a| {
                (
                    a.name(),
                    self.chords_for(a).into_iter().map(Chord::as_str).collect(),
                )
            })
            .collect()
    }
}

/// Transport settings that are not playback state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    pub rate_presets: RatePresets,
    pub big_step_us: u64,
    pub scroll_step_us: u64,
    /// Initial width of the local timeline window.
    pub zoom_span_us: u64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig {
            rate_presets: RatePresets::default(),
            big_step_us: 5_000_000,
            scroll_step_us: 1_000_000,
            zoom_span_us: 10_000_000,
        }
    }
}

/// The per-user settings document.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Config {
    pub keymap: Keymap,
    pub reaction: ReactionConfig,
    pub transport: TransportConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    keymap: BTreeMap<String, Value>,
    #[serde(default)]
    reaction: ReactionConfig,
    #[serde(default)]
    transport: TransportConfig,
}

#[derive(Serialize)]
struct ConfigOut<'a> {
    keymap: BTreeMap<&'static str, Vec<&'a str>>,
    reaction: &'a ReactionConfig,
    transport: &'a TransportConfig,
}

/// Parses a config document. Missing sections and actions keep their defaults.
pub fn load_config(bytes: &[u8]) -> Result<Config> {
    let value: Value =
        serde_json::from_slice(bytes).map_err(|e| Error::MalformedConfig(e.to_string()))?;
    if !value.is_object() {
        return Err(Error::MalformedConfig(
            "config must be a JSON object".into(),
        ));
    }
    let raw: RawConfig =
        serde_json::from_value(value).map_err(|e| Error::MalformedConfig(e.to_string()))?;
    let mut overrides = BTreeMap::new();
    for (name, value) in &raw.keymap {
        let action: Action = name.parse()?;
        let chords = match value {
            Value::String(s) => vec![s.as_str()],
            Value::Array(items) => items
                .iter()
                .map(|v| {
                    v.as_str().ok_or_else(|| {
                        Error::MalformedConfig(format!("keymap.{name}: chords must be strings"))
                    })
                })
                .collect::<Result<_>>()?,
            _ => {
                return Err(Error::MalformedConfig(format!(
                    "keymap.{name}: expected a chord or a list of chords"
                )))
            }
        };
        let chords = chords
            .into_iter()
            .map(|c| {
                c.parse::<Chord>().map_err(|_| {
                    Error::MalformedConfig(format!("keymap.{name}: unknown chord `{c}`"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        overrides.insert(action, chords);
    }
    raw.reaction.validate()?;
    Ok(Config {
        keymap: Keymap::default().with_overrides(&overrides)?,
        reaction: raw.reaction,
        transport: raw.transport,
    })
}

/// Writes every section in full, as pretty JSON with a trailing newline.
pub fn save_config(c: &Config) -> Vec<u8> {
    let out = ConfigOut {
        keymap: c.keymap.sections(),
        reaction: &c.reaction,
        transport: &c.transport,
    };
    let mut bytes = serde_json::to_vec_pretty(&out).expect("config serialization is infallible");
    bytes.push(b'\n');
    bytes
}

//! Virtual playback head.
//!
//! The transport never reads a clock. Callers feed it wall-clock deltas (the
//! UI from its animation loop, tests from a script), which keeps every
//! session reproducible.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{FrameRate, TimePoint};

/// Signed playback multiplier `num/den`, never zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rate {
    num: i32,
    den: u32,
}

impl Rate {
    pub const NORMAL: Rate = Rate { num: 1, den: 1 };

    pub fn new(num: i32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidRate(format!("{num}/{den}")));
        }
        let mut a = num.unsigned_abs();
        let mut b = den;
        while b != 0 {
            (a, b) = (b, a % b);
        }
        Ok(Rate {
            num: num / a as i32,
            den: den / a,
        })
    }

    pub fn integer(n: i32) -> Result<Self> {
        Rate::new(n, 1)
    }

    pub fn num(self) -> i32 {
        self.num
    }

    pub fn den(self) -> u32 {
        self.den
    }

    pub fn is_reverse(self) -> bool {
        self.num < 0
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Closest rational with a denominator of at most 10 000.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::InvalidRate(x.to_string()));
        }
        for den in 1..=10_000u32 {
            let scaled = x * den as f64;
            let rounded = scaled.round();
            if (scaled - rounded).abs() < 1e-9 * den as f64 && rounded.abs() <= i32::MAX as f64 {
                return Rate::new(rounded as i32, den);
            }
        }
        Err(Error::InvalidRate(x.to_string()))
    }

    /// Media time covered by `wall` microseconds of real time, rounded half away from zero.
    pub fn media_span(self, wall: u64) -> i64 {
        let n = wall as i128 * self.num as i128;
        let d = self.den as i128;
        let q = (2 * n.abs() + d) / (2 * d);
        (q * n.signum()) as i64
    }

    fn sort_key(self) -> f64 {
        self.as_f64()
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Rate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n = n.trim().parse().map_err(|_| Error::InvalidRate(s.into()))?;
            let d = d.trim().parse().map_err(|_| Error::InvalidRate(s.into()))?;
            Rate::new(n, d)
        } else {
            let x: f64 = s.parse().map_err(|_| Error::InvalidRate(s.into()))?;
            Rate::from_f64(x)
        }
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.den == 1 {
            s.serialize_i64(self.num as i64)
        } else {
            s.serialize_f64(self.as_f64())
        }
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        let rate = match Raw::deserialize(d)? {
            Raw::Number(x) => Rate::from_f64(x),
            Raw::Text(s) => s.parse(),
        };
        rate.map_err(serde::de::Error::custom)
    }
}

/// The legal playback rates, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatePresets(Vec<Rate>);

impl Default for RatePresets {
    fn default() -> Self {
        let r = |n, d| Rate::new(n, d).unwrap();
        RatePresets(vec![
            r(-8, 1),
            r(-4, 1),
            r(-2, 1),
            r(-1, 1),
            r(-1, 2),
            r(1, 2),
            r(1, 1),
            r(2, 1),
            r(4, 1),
            r(8, 1),
        ])
    }
}

impl RatePresets {
    pub fn new(mut rates: Vec<Rate>) -> Result<Self> {
        rates.sort_by(|a, b| a.sort_key().total_cmp(&b.sort_key()));
        rates.dedup();
        if !rates.contains(&Rate::NORMAL) {
            return Err(Error::InvalidRate("presets must include 1".into()));
        }
        Ok(RatePresets(rates))
    }

    pub fn rates(&self) -> &[Rate] {
        &self.0
    }

    pub fn contains(&self, r: Rate) -> bool {
        self.0.contains(&r)
    }

    /// The next faster preset, or `r` when already fastest or not a preset.
    pub fn step_up(&self, r: Rate) -> Rate {
        match self.0.iter().position(|&p| p == r) {
            Some(i) if i + 1 < self.0.len() => self.0[i + 1],
            _ => r,
        }
    }

    pub fn step_down(&self, r: Rate) -> Rate {
        match self.0.iter().position(|&p| p == r) {
            Some(i) if i > 0 => self.0[i - 1],
            _ => r,
        }
    }
}

impl Serialize for RatePresets {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RatePresets {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        RatePresets::new(Vec::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Logical playback state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportState {
    position: TimePoint,
    rate: Rate,
    playing: bool,
    duration: TimePoint,
    fps: FrameRate,
    /// Sub-microsecond remainder of the last ticks, in units of `1 / rate.den` µs.
    residual: i64,
}

impl TransportState {
    pub fn new(duration: TimePoint, fps: FrameRate) -> Self {
        TransportState {
            position: TimePoint::ZERO,
            rate: Rate::NORMAL,
            playing: false,
            duration,
            fps,
            residual: 0,
        }
    }

    pub fn position(&self) -> TimePoint {
        self.position
    }

    pub fn rate(&self) -> Rate {
        self.rate
    }

    pub fn playing(&self) -> bool {
        self.playing
    }

    pub fn duration(&self) -> TimePoint {
        self.duration
    }

    pub fn fps(&self) -> FrameRate {
        self.fps
    }

    /// Advances the playhead by `wall_delta` µs of real time.
    pub fn tick(&self, wall_delta: u64) -> TransportState {
        if !self.playing {
            return self.clone();
        }
        let total = self.residual as i128 + wall_delta as i128 * self.rate.num as i128;
        let den = self.rate.den as i128;
        // Truncation toward zero keeps split ticks equal to one long tick.
        let advance = total / den;
        let residual = total % den;
        let target = self.position.0 as i128 + advance;
        let mut next = self.clone();
        let forward = self.rate.num > 0;
        if (!forward && target <= 0) || (forward && target >= self.duration.0 as i128) {
            next.position = TimePoint(target.clamp(0, self.duration.0 as i128) as u64);
            next.playing = false;
            next.residual = 0;
        } else {
            next.position = TimePoint(target as u64);
            next.residual = residual as i64;
        }
        next
    }

    /// Moves the playhead, clamping into `[0, duration]`. Play state is untouched.
    pub fn seek(&self, t: TimePoint) -> TransportState {
        TransportState {
            position: t.min(self.duration),
            residual: 0,
            ..self.clone()
        }
    }

    pub fn seek_by(&self, delta: i64) -> TransportState {
        self.seek(self.position.offset_clamped(delta, self.duration))
    }

    pub fn set_rate(&self, rate: Rate, presets: &RatePresets) -> Result<TransportState> {
        if !presets.contains(rate) {
            return Err(Error::InvalidRate(rate.to_string()));
        }
        Ok(TransportState {
            rate,
            residual: 0,
            ..self.clone()
        })
    }

    pub fn toggle_play(&self) -> TransportState {
        TransportState {
            playing: !self.playing,
            residual: 0,
            ..self.clone()
        }
    }
}

/// A window of exactly `span` µs around `center`, shifted to stay inside the timeline.
///
/// When `span` exceeds the duration the whole timeline is returned.
pub fn zoom_window(center: TimePoint, span: u64, duration: TimePoint) -> (TimePoint, TimePoint) {
    if span >= duration.0 {
        return (TimePoint::ZERO, duration);
    }
    let center = center.min(duration).0;
    let start = center.saturating_sub(span / 2).min(duration.0 - span);
    (TimePoint(start), TimePoint(start + span))
}

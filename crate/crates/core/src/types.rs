//! Domain vocabulary shared by every stage: poses, AU vectors, frames, events,
//! sessions and time buckets.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::scalar::Scalar;

pub const PITCH_LIMIT_DEG: f64 = 90.0;
pub const YAW_LIMIT_DEG: f64 = 180.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("{field} is not a finite number")]
    NonFinite { field: &'static str },
    #[error("pitch {0} outside [-90, 90] degrees")]
    PitchOutOfRange(f64),
    #[error("yaw {0} outside [-180, 180] degrees")]
    YawOutOfRange(f64),
    #[error("AU weight a{index} = {value} outside [-1, 1]")]
    AuOutOfRange { index: usize, value: f64 },
    #[error("negative timestamp {0}")]
    NegativeTime(f64),
    #[error("non-monotone timestamp: {curr} does not follow {prev}")]
    NonMonotoneTime { prev: f64, curr: f64 },
    #[error("frame at t={0} carries neither pose nor AU vector")]
    EmptyFrame(f64),
    #[error("events out of time order: {curr} after {prev}")]
    UnorderedEvents { prev: f64, curr: f64 },
    #[error("invalid session date {0:?}")]
    InvalidDate(String),
    #[error("invalid user label {0:?}")]
    InvalidUserLabel(String),
}

fn finite<T: Scalar>(x: T, field: &'static str) -> Result<T, ValidationError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ValidationError::NonFinite { field })
    }
}

/// Head orientation as Euler angles in degrees. Roll is not tracked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPose<T>", bound(deserialize = "T: Scalar"))]
pub struct HeadPose<T> {
    pitch: T,
    yaw: T,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPose<T> {
    pitch: T,
    yaw: T,
}

impl<T: Scalar> TryFrom<RawPose<T>> for HeadPose<T> {
    type Error = ValidationError;

    fn try_from(raw: RawPose<T>) -> Result<Self, Self::Error> {
        Self::new(raw.pitch, raw.yaw)
    }
}

impl<T: Scalar> HeadPose<T> {
    pub fn new(pitch: T, yaw: T) -> Result<Self, ValidationError> {
        let pitch = finite(pitch, "pitch")?;
        let yaw = finite(yaw, "yaw")?;
        if pitch.abs() > T::lit(PITCH_LIMIT_DEG) {
            return Err(ValidationError::PitchOutOfRange(pitch.to_f64_lossy()));
        }
        if yaw.abs() > T::lit(YAW_LIMIT_DEG) {
            return Err(ValidationError::YawOutOfRange(yaw.to_f64_lossy()));
        }
        Ok(Self { pitch, yaw })
    }

    pub fn neutral() -> Self {
        Self { pitch: T::zero(), yaw: T::zero() }
    }

    pub fn pitch(&self) -> T {
        self.pitch
    }

    pub fn yaw(&self) -> T {
        self.yaw
    }
}

/// The six tracked Animation Unit weights, each in `[-1, 1]`.
///
/// Index order: lip raiser, jaw lower, lip stretcher, brow lower,
/// lip corner depressor, brow raiser. All zeros is the neutral face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[T; 6]", into = "[T; 6]", bound(deserialize = "T: Scalar", serialize = "T: Scalar"))]
pub struct AuVector<T>([T; 6]);

impl<T: Scalar> TryFrom<[T; 6]> for AuVector<T> {
    type Error = ValidationError;

    fn try_from(weights: [T; 6]) -> Result<Self, Self::Error> {
        Self::new(weights)
    }
}

impl<T: Scalar> From<AuVector<T>> for [T; 6] {
    fn from(au: AuVector<T>) -> Self {
        au.0
    }
}

impl<T: Scalar> AuVector<T> {
    pub fn new(weights: [T; 6]) -> Result<Self, ValidationError> {
        for (i, &w) in weights.iter().enumerate() {
            finite(w, "AU weight")?;
            if w.abs() > T::one() {
                return Err(ValidationError::AuOutOfRange { index: i + 1, value: w.to_f64_lossy() });
            }
        }
        Ok(Self(weights))
    }

    /// Builds from `f64` literals; panics if the weights are invalid. Intended for constants.
    pub fn from_f64(weights: [f64; 6]) -> Self {
        Self::new(weights.map(T::lit)).expect("AU literal out of range")
    }

    pub fn neutral() -> Self {
        Self([T::zero(); 6])
    }

    pub fn weights(&self) -> [T; 6] {
        self.0
    }

    pub fn lip_raiser(&self) -> T {
        self.0[0]
    }

    pub fn jaw_lower(&self) -> T {
        self.0[1]
    }

    pub fn lip_stretcher(&self) -> T {
        self.0[2]
    }

    pub fn brow_lower(&self) -> T {
        self.0[3]
    }

    pub fn lip_corner_depressor(&self) -> T {
        self.0[4]
    }

    pub fn brow_raiser(&self) -> T {
        self.0[5]
    }
}

/// One timestamped sensor frame. `t` is seconds from session start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSample<T> {
    pub t: T,
    pub pose: Option<HeadPose<T>>,
    pub au: Option<AuVector<T>>,
}

impl<T: Scalar> FrameSample<T> {
    pub fn new(t: T, pose: Option<HeadPose<T>>, au: Option<AuVector<T>>) -> Result<Self, ValidationError> {
        let t = finite(t, "t")?;
        if t < T::zero() {
            return Err(ValidationError::NegativeTime(t.to_f64_lossy()));
        }
        if pose.is_none() && au.is_none() {
            return Err(ValidationError::EmptyFrame(t.to_f64_lossy()));
        }
        Ok(Self { t, pose, au })
    }
}

/// Checks that timestamps strictly increase across the stream.
pub fn check_monotone<T: Scalar>(frames: &[FrameSample<T>]) -> Result<(), ValidationError> {
    for w in frames.windows(2) {
        if w[1].t <= w[0].t {
            return Err(ValidationError::NonMonotoneTime {
                prev: w[0].t.to_f64_lossy(),
                curr: w[1].t.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

/// Label types that can key a [`TimeBucket`].
pub trait EventLabel: Copy + Ord + Eq + fmt::Debug + fmt::Display + FromStr + Send + Sync + 'static {
    const ALL: &'static [Self];
}

macro_rules! label_enum {
    ($(#[$meta:meta])* $name:ident, $what:literal, { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl EventLabel for $name {
            const ALL: &'static [Self] = &[$($name::$variant),+];
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownLabel;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(UnknownLabel {
                        kind: $what,
                        value: s.to_owned(),
                        expected: &[$($text),+],
                    }),
                }
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                deserializer.deserialize_str(LabelVisitor::<$name>::new($what))
            }
        }
    };
}

/// A string that does not name any variant of a label enum.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid {kind} {value:?}, expected one of {}", expected.join(", "))]
pub struct UnknownLabel {
    pub kind: &'static str,
    pub value: String,
    pub expected: &'static [&'static str],
}

struct LabelVisitor<L> {
    what: &'static str,
    _marker: std::marker::PhantomData<L>,
}

impl<L> LabelVisitor<L> {
    fn new(what: &'static str) -> Self {
        Self { what, _marker: std::marker::PhantomData }
    }
}

impl<L> Visitor<'_> for LabelVisitor<L>
where
    L: FromStr<Err = UnknownLabel>,
{
    type Value = L;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a {} string", self.what)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<L, E> {
        v.parse().map_err(E::custom)
    }
}

label_enum!(
    /// Head movement direction.
    Direction, "direction", {
        Up => "UP",
        Down => "DOWN",
        Left => "LEFT",
        Right => "RIGHT",
    }
);

label_enum!(
    /// Recognised facial expression.
    Emotion, "emotion", {
        Angry => "ANGRY",
        Happy => "HAPPY",
        Sad => "SAD",
        Surprised => "SURPRISED",
    }
);

impl Direction {
    pub fn is_vertical(self) -> bool {
        matches!(self, Direction::Up | Direction::Down)
    }
}

/// Either kind of event label; used by ground-truth annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Direction(Direction),
    Emotion(Emotion),
}

impl From<Direction> for Label {
    fn from(d: Direction) -> Self {
        Label::Direction(d)
    }
}

impl From<Emotion> for Label {
    fn from(e: Emotion) -> Self {
        Label::Emotion(e)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Direction(d) => d.fmt(f),
            Label::Emotion(e) => e.fmt(f),
        }
    }
}

impl FromStr for Label {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(d) = s.parse::<Direction>() {
            return Ok(Label::Direction(d));
        }
        s.parse::<Emotion>().map(Label::Emotion).map_err(|_| UnknownLabel {
            kind: "label",
            value: s.to_owned(),
            expected: &["UP", "DOWN", "LEFT", "RIGHT", "ANGRY", "HAPPY", "SAD", "SURPRISED"],
        })
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_str(LabelVisitor::<Label>::new("label"))
    }
}

/// A detected head movement. `intensity` is the absolute angular delta in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar"))]
pub struct MovementEvent<T> {
    pub t: T,
    pub direction: Direction,
    pub intensity: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar"))]
pub struct EmotionEvent<T> {
    pub t: T,
    pub emotion: Emotion,
}

/// Time and label of any event; the common shape used by bucketing and scoring.
pub trait TimedLabel<T> {
    type Label;
    fn time(&self) -> T;
    fn label(&self) -> Self::Label;
}

impl<T: Copy> TimedLabel<T> for MovementEvent<T> {
    type Label = Direction;
    fn time(&self) -> T {
        self.t
    }
    fn label(&self) -> Direction {
        self.direction
    }
}

impl<T: Copy> TimedLabel<T> for EmotionEvent<T> {
    type Label = Emotion;
    fn time(&self) -> T {
        self.t
    }
    fn label(&self) -> Emotion {
        self.emotion
    }
}

const MONTHS: [&str; 12] = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];

/// Calendar date of a session, restricted to 2000–2099 so the two-digit
/// year of the document format is unambiguous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SessionDate(NaiveDate);

impl SessionDate {
    pub fn new(year: i32, month: u32, day: u32) -> Result<Self, ValidationError> {
        NaiveDate::from_ymd_opt(year, month, day)
            .filter(|_| (2000..=2099).contains(&year))
            .map(Self)
            .ok_or_else(|| ValidationError::InvalidDate(format!("{year:04}-{month:02}-{day:02}")))
    }

    pub fn date(&self) -> NaiveDate {
        self.0
    }

    /// Parses the document form, e.g. `2/Mar/16`: day without leading zero,
    /// English month abbreviation, two-digit year.
    pub fn parse_short(s: &str) -> Result<Self, ValidationError> {
        let bad = || ValidationError::InvalidDate(s.to_owned());
        let mut parts = s.split('/');
        let (Some(d), Some(m), Some(y), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(bad());
        };
        if d.is_empty() || d.len() > 2 || d.starts_with('0') || !d.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        if y.len() != 2 || !y.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let month = MONTHS.iter().position(|&name| name == m).ok_or_else(bad)? as u32 + 1;
        let day: u32 = d.parse().map_err(|_| bad())?;
        let year: i32 = y.parse().map_err(|_| bad())?;
        Self::new(2000 + year, month, day).map_err(|_| bad())
    }

    /// Parses `yyyy-mm-dd`.
    pub fn parse_iso(s: &str) -> Result<Self, ValidationError> {
        let date = NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| ValidationError::InvalidDate(s.to_owned()))?;
        if s.len() != 10 {
            return Err(ValidationError::InvalidDate(s.to_owned()));
        }
        Self::new(date.year(), date.month(), date.day())
    }

    pub fn short(&self) -> String {
        format!("{}/{}/{:02}", self.0.day(), MONTHS[self.0.month0() as usize], self.0.year() % 100)
    }

    pub fn iso(&self) -> String {
        self.0.format("%Y-%m-%d").to_string()
    }
}

impl fmt::Display for SessionDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.short())
    }
}

/// Accepts either the document form or ISO `yyyy-mm-dd`.
impl FromStr for SessionDate {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.contains('/') {
            Self::parse_short(s)
        } else {
            Self::parse_iso(s)
        }
    }
}

impl Serialize for SessionDate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.short())
    }
}

impl<'de> Deserialize<'de> for SessionDate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        SessionDate::parse_short(&s).map_err(de::Error::custom)
    }
}

/// A short user identifier usable as a registry file name component:
/// 1–64 ASCII letters, digits, `-` or `_`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct UserLabel(String);

impl UserLabel {
    pub fn new(s: impl Into<String>) -> Result<Self, ValidationError> {
        let s = s.into();
        let ok = !s.is_empty()
            && s.len() <= 64
            && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_');
        if ok {
            Ok(Self(s))
        } else {
            Err(ValidationError::InvalidUserLabel(s))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for UserLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One user's recorded run.
///
/// The on-disk documents carry only the date and one event list, so the user
/// label comes from the registry key.
#[derive(Debug, Clone, PartialEq)]
pub struct Session<T> {
    pub date: SessionDate,
    pub user_label: String,
    pub movements: Vec<MovementEvent<T>>,
    pub emotions: Vec<EmotionEvent<T>>,
}

impl<T: Scalar> Session<T> {
    pub fn new(date: SessionDate, user_label: impl Into<String>) -> Self {
        Self { date, user_label: user_label.into(), movements: Vec::new(), emotions: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        check_event_order(&self.movements)?;
        check_event_order(&self.emotions)
    }
}

/// Event lists must be non-decreasing in time (two directions can share a frame).
pub fn check_event_order<T: Scalar, E: TimedLabel<T>>(events: &[E]) -> Result<(), ValidationError> {
    for w in events.windows(2) {
        if w[1].time() < w[0].time() {
            return Err(ValidationError::UnorderedEvents {
                prev: w[0].time().to_f64_lossy(),
                curr: w[1].time().to_f64_lossy(),
            });
        }
    }
    Ok(())
}

/// Event counts over the half-open interval `[start_t, start_t + width)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, bound(serialize = "T: Scalar, L: EventLabel + Serialize", deserialize = "T: Scalar, L: EventLabel + Deserialize<'de>"))]
pub struct TimeBucket<T, L> {
    pub start_t: T,
    pub width: T,
    pub counts: BTreeMap<L, u64>,
}

impl<T, L: EventLabel> TimeBucket<T, L> {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn count(&self, label: L) -> u64 {
        self.counts.get(&label).copied().unwrap_or(0)
    }
}

/// An asserted event used to score extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar"))]
pub struct GroundTruthAnnotation<T> {
    pub t: T,
    pub label: Label,
}

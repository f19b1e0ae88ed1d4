//! Session documents: an array of `{"SessionDate", "SessionData"}` records,
//! one document per event kind.
//!
//! ```json
//! [
//!   {
//!     "SessionDate": "2/Mar/16",
//!     "SessionData": [
//!       {
//!         "time": 2.23,
//!         "direction": "RIGHT",
//!         "intensity": 6.78485
//!       }
//!     ]
//!   }
//! ]
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::types::{Direction, Emotion, EmotionEvent, MovementEvent, Session, SessionDate, ValidationError};

/// Fractional digits kept for `"time"`.
pub const TIME_DIGITS: i32 = 2;
/// Fractional digits kept for `"intensity"`.
pub const INTENSITY_DIGITS: i32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DocumentKind {
    Movement,
    Emotion,
}

impl DocumentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DocumentKind::Movement => "movement",
            DocumentKind::Emotion => "emotion",
        }
    }
}

impl fmt::Display for DocumentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DocumentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "movement" | "direction" => Ok(DocumentKind::Movement),
            "emotion" => Ok(DocumentKind::Emotion),
            other => Err(format!("unknown document kind {other:?}, expected movement or emotion")),
        }
    }
}

impl Serialize for DocumentKind {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for DocumentKind {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("invalid session at [{index}]: {source}")]
    Invalid { index: usize, source: ValidationError },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record<E> {
    #[serde(rename = "SessionDate")]
    date: SessionDate,
    #[serde(rename = "SessionData")]
    data: Vec<E>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar", serialize = "T: Scalar"))]
struct MovementRecord<T> {
    time: T,
    direction: Direction,
    intensity: T,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar", serialize = "T: Scalar"))]
struct EmotionRecord<T> {
    time: T,
    emotion: Emotion,
}

fn to_pretty<V: Serialize>(value: &V) -> String {
    serde_json::to_string_pretty(value).expect("document values are always serializable")
}

/// Renders one document of the given kind. Times keep two fractional digits
/// and intensities five; each is printed as the shortest literal that reads
/// back to the rounded value.
pub fn serialize_sessions<T: Scalar>(sessions: &[Session<T>], kind: DocumentKind) -> String {
    match kind {
        DocumentKind::Movement => {
            let records: Vec<Record<MovementRecord<T>>> = sessions
                .iter()
                .map(|s| Record {
                    date: s.date,
                    data: s
                        .movements
                        .iter()
                        .map(|m| MovementRecord {
                            time: m.t.round_to(TIME_DIGITS),
                            direction: m.direction,
                            intensity: m.intensity.round_to(INTENSITY_DIGITS),
                        })
                        .collect(),
                })
                .collect();
            to_pretty(&records)
        }
        DocumentKind::Emotion => {
            let records: Vec<Record<EmotionRecord<T>>> = sessions
                .iter()
                .map(|s| Record {
                    date: s.date,
                    data: s
                        .emotions
                        .iter()
                        .map(|e| EmotionRecord { time: e.t.round_to(TIME_DIGITS), emotion: e.emotion })
                        .collect(),
                })
                .collect();
            to_pretty(&records)
        }
    }
}

fn decode<'a, V: Deserialize<'a>>(text: &'a str) -> Result<V, DocumentError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        DocumentError::Schema { path, message: err.into_inner().to_string() }
    })?;
    Ok(value)
}

/// Parses a document of the given kind. The user label is not part of the
/// document and is left empty; the other kind's event list is empty.
pub fn parse_sessions<T: Scalar>(text: &str, kind: DocumentKind) -> Result<Vec<Session<T>>, DocumentError> {
    let sessions: Vec<Session<T>> = match kind {
        DocumentKind::Movement => decode::<Vec<Record<MovementRecord<T>>>>(text)?
            .into_iter()
            .map(|r| Session {
                date: r.date,
                user_label: String::new(),
                movements: r
                    .data
                    .into_iter()
                    .map(|m| MovementEvent { t: m.time, direction: m.direction, intensity: m.intensity })
                    .collect(),
                emotions: Vec::new(),
            })
            .collect(),
        DocumentKind::Emotion => decode::<Vec<Record<EmotionRecord<T>>>>(text)?
            .into_iter()
            .map(|r| Session {
                date: r.date,
                user_label: String::new(),
                movements: Vec::new(),
                emotions: r.data.into_iter().map(|e| EmotionEvent { t: e.time, emotion: e.emotion }).collect(),
            })
            .collect(),
    };
    for (index, s) in sessions.iter().enumerate() {
        s.validate().map_err(|source| DocumentError::Invalid { index, source })?;
        let bad_value = s
            .movements
            .iter()
            .flat_map(|m| [m.t, m.intensity])
            .chain(s.emotions.iter().map(|e| e.t))
            .find(|v| *v < T::zero());
        if let Some(v) = bad_value {
            return Err(DocumentError::Invalid { index, source: ValidationError::NegativeTime(v.to_f64_lossy()) });
        }
    }
    Ok(sessions)
}

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::types::{AuVector, FrameSample, HeadPose, ValidationError};

/// One line of a replay file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar", serialize = "T: Scalar"))]
pub struct ReplayRecord<T> {
    pub t: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yaw: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub au: Option<[T; 6]>,
}

impl<T: Scalar> ReplayRecord<T> {
    pub fn into_sample(self) -> Result<FrameSample<T>, ReplayRecordError> {
        let pose = match (self.pitch, self.yaw) {
            (Some(pitch), Some(yaw)) => Some(HeadPose::new(pitch, yaw)?),
            (None, None) => None,
            _ => return Err(ReplayRecordError::PartialPose),
        };
        let au = self.au.map(AuVector::new).transpose()?;
        Ok(FrameSample::new(self.t, pose, au)?)
    }
}

impl<T: Scalar> From<&FrameSample<T>> for ReplayRecord<T> {
    fn from(f: &FrameSample<T>) -> Self {
        Self {
            t: f.t,
            pitch: f.pose.map(|p| p.pitch()),
            yaw: f.pose.map(|p| p.yaw()),
            au: f.au.map(|a| a.weights()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayRecordError {
    #[error("pitch and yaw must be given together")]
    PartialPose,
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("malformed record at line {line}: {source}")]
    Malformed { line: usize, source: serde_json::Error },
    #[error("invalid record at line {line}: {source}")]
    Invalid { line: usize, source: ReplayRecordError },
    #[error("non-monotone timestamp at line {line} ({curr} after {prev})")]
    NonMonotone { line: usize, prev: f64, curr: f64 },
    #[error("read failed at line {line}: {source}")]
    Io { line: usize, source: io::Error },
}

impl ReplayError {
    pub fn line(&self) -> usize {
        match self {
            ReplayError::Malformed { line, .. }
            | ReplayError::Invalid { line, .. }
            | ReplayError::NonMonotone { line, .. }
            | ReplayError::Io { line, .. } => *line,
        }
    }
}

/// Single-pass reader yielding validated samples. Blank lines are skipped;
/// iteration stops after the first error.
pub struct ReplayReader<R, T> {
    lines: io::Lines<R>,
    line_no: usize,
    last_t: Option<T>,
    failed: bool,
}

impl<R: BufRead, T: Scalar> ReplayReader<R, T> {
    pub fn new(reader: R) -> Self {
        Self { lines: reader.lines(), line_no: 0, last_t: None, failed: false }
    }

    fn parse_line(&mut self, text: &str) -> Result<FrameSample<T>, ReplayError> {
        let line = self.line_no;
        let record: ReplayRecord<T> =
            serde_json::from_str(text).map_err(|source| ReplayError::Malformed { line, source })?;
        let sample = record.into_sample().map_err(|source| ReplayError::Invalid { line, source })?;
        if let Some(prev) = self.last_t {
            if sample.t <= prev {
                return Err(ReplayError::NonMonotone {
                    line,
                    prev: prev.to_f64_lossy(),
                    curr: sample.t.to_f64_lossy(),
                });
            }
        }
        self.last_t = Some(sample.t);
        Ok(sample)
    }
}

impl<R: BufRead, T: Scalar> Iterator for ReplayReader<R, T> {
    type Item = Result<FrameSample<T>, ReplayError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let result = match line {
                Ok(text) if text.trim().is_empty() => continue,
                Ok(text) => self.parse_line(&text),
                Err(source) => Err(ReplayError::Io { line: self.line_no, source }),
            };
            self.failed = result.is_err();
            return Some(result);
        }
    }
}

pub fn parse_replay<T: Scalar, R: BufRead>(reader: R) -> Result<Vec<FrameSample<T>>, ReplayError> {
    ReplayReader::new(reader).collect()
}

pub fn parse_replay_str<T: Scalar>(text: &str) -> Result<Vec<FrameSample<T>>, ReplayError> {
    parse_replay(text.as_bytes())
}

pub fn write_replay<T: Scalar, W: Write>(frames: &[FrameSample<T>], mut out: W) -> io::Result<()> {
    for frame in frames {
        serde_json::to_writer(&mut out, &ReplayRecord::from(frame))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn replay_to_string<T: Scalar>(frames: &[FrameSample<T>]) -> String {
    let mut buf = Vec::new();
    write_replay(frames, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

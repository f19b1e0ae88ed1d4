//! Frame differencing and rule-based classification of head movements and
//! facial expressions.
//!
//! Movements: `pitch_diff = prev.pitch - curr.pitch`, `yaw_diff = prev.yaw - curr.yaw`;
//! `UP` when `pitch_diff > T`, `DOWN` when `pitch_diff < -T`, `LEFT` when
//! `yaw_diff > T`, `RIGHT` when `yaw_diff < -T`.
//!
//! Emotions, with AU weights `a1..a6`:
//!
//! | emotion   | rule                                                      |
//! |-----------|-----------------------------------------------------------|
//! | SAD       | `a6 < 0 && a5 > 0`                                        |
//! | SURPRISED | `(a2 < -0.25 \|\| a2 > 0.25) && a4 < 0`                   |
//! | HAPPY     | `a3 > 0.4 \|\| a5 < 0`                                    |
//! | ANGRY     | `(a4 > 0 && (a2 > 0.25 \|\| a2 < -0.25)) \|\| (a4 > 0 && a5 > 0)` |
//!
//! The rules overlap, so they are tried in a configurable priority order and
//! the first match wins. [`RuleMode::Literal`] switches the `DOWN`/`RIGHT`
//! comparisons to `< T` and the surprise jaw test to `a2 < 0.25 || a2 > 0.25`,
//! which is how the rules read before sign correction.

use arrayvec::ArrayVec;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::types::{AuVector, Direction, Emotion, EmotionEvent, FrameSample, HeadPose, MovementEvent};

pub const DEFAULT_THRESHOLD_DEG: f64 = 4.0;
pub const DEFAULT_EMOTION_PRIORITY: [Emotion; 4] = [Emotion::Sad, Emotion::Surprised, Emotion::Happy, Emotion::Angry];

/// Jaw-lower magnitude used by the surprise and anger rules.
const JAW_BOUND: f64 = 0.25;
/// Lip-stretcher bound used by the happiness rule.
const STRETCH_BOUND: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("threshold must be a positive finite number, got {0}")]
    NonPositiveThreshold(f64),
    #[error("emotion priority must list each emotion exactly once")]
    InvalidPriority,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RuleMode {
    /// Symmetric thresholds and the two-sided jaw test.
    #[default]
    Corrected,
    /// Comparisons exactly as originally written; fires on negligible motion.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionConfig<T> {
    threshold_deg: T,
    emotion_priority: [Emotion; 4],
    emit_on_transition_only: bool,
    rules: RuleMode,
}

impl<T: Scalar> Default for ExtractionConfig<T> {
    fn default() -> Self {
        Self {
            threshold_deg: T::lit(DEFAULT_THRESHOLD_DEG),
            emotion_priority: DEFAULT_EMOTION_PRIORITY,
            emit_on_transition_only: true,
            rules: RuleMode::Corrected,
        }
    }
}

impl<T: Scalar> ExtractionConfig<T> {
    pub fn with_threshold(threshold_deg: T) -> Result<Self, ConfigError> {
        Self::default().threshold(threshold_deg)
    }

    pub fn threshold(mut self, threshold_deg: T) -> Result<Self, ConfigError> {
        if !(threshold_deg.is_finite() && threshold_deg > T::zero()) {
            return Err(ConfigError::NonPositiveThreshold(threshold_deg.to_f64_lossy()));
        }
        self.threshold_deg = threshold_deg;
        Ok(self)
    }

    pub fn priority(mut self, order: [Emotion; 4]) -> Result<Self, ConfigError> {
        let mut seen = [false; 4];
        for e in order {
            let i = e as usize;
            if seen[i] {
                return Err(ConfigError::InvalidPriority);
            }
            seen[i] = true;
        }
        self.emotion_priority = order;
        Ok(self)
    }

    pub fn transition_only(mut self, yes: bool) -> Self {
        self.emit_on_transition_only = yes;
        self
    }

    pub fn rules(mut self, rules: RuleMode) -> Self {
        self.rules = rules;
        self
    }

    pub fn threshold_deg(&self) -> T {
        self.threshold_deg
    }

    pub fn emotion_priority(&self) -> [Emotion; 4] {
        self.emotion_priority
    }

    pub fn emits_on_transition_only(&self) -> bool {
        self.emit_on_transition_only
    }

    pub fn rule_mode(&self) -> RuleMode {
        self.rules
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseDelta<T> {
    pub pitch: T,
    pub yaw: T,
}

/// Previous minus current, per axis.
pub fn pose_diff<T: Scalar>(prev: &HeadPose<T>, curr: &HeadPose<T>) -> PoseDelta<T> {
    PoseDelta { pitch: prev.pitch() - curr.pitch(), yaw: prev.yaw() - curr.yaw() }
}

/// At most one vertical and one horizontal movement, vertical first.
pub fn classify_movement<T: Scalar>(delta: PoseDelta<T>, cfg: &ExtractionConfig<T>) -> ArrayVec<(Direction, T), 2> {
    let thr = cfg.threshold_deg;
    let low = match cfg.rules {
        RuleMode::Corrected => -thr,
        RuleMode::Literal => thr,
    };
    let mut out = ArrayVec::new();
    if delta.pitch > thr {
        out.push((Direction::Up, delta.pitch.abs()));
    } else if delta.pitch < low {
        out.push((Direction::Down, delta.pitch.abs()));
    }
    if delta.yaw > thr {
        out.push((Direction::Left, delta.yaw.abs()));
    } else if delta.yaw < low {
        out.push((Direction::Right, delta.yaw.abs()));
    }
    out
}

/// Whether a single emotion's boundary rule holds for `au`.
pub fn emotion_rule_holds<T: Scalar>(emotion: Emotion, au: &AuVector<T>, rules: RuleMode) -> bool {
    let zero = T::zero();
    let jaw = T::lit(JAW_BOUND);
    let a2 = au.jaw_lower();
    let a4 = au.brow_lower();
    let a5 = au.lip_corner_depressor();
    match emotion {
        Emotion::Sad => au.brow_raiser() < zero && a5 > zero,
        Emotion::Surprised => {
            let jaw_open = match rules {
                RuleMode::Corrected => a2 < -jaw || a2 > jaw,
                RuleMode::Literal => a2 < jaw || a2 > jaw,
            };
            jaw_open && a4 < zero
        }
        Emotion::Happy => au.lip_stretcher() > T::lit(STRETCH_BOUND) || a5 < zero,
        Emotion::Angry => (a4 > zero && (a2 > jaw || a2 < -jaw)) || (a4 > zero && a5 > zero),
    }
}

/// First emotion in priority order whose rule holds; `None` is the neutral face.
pub fn classify_emotion<T: Scalar>(au: &AuVector<T>, cfg: &ExtractionConfig<T>) -> Option<Emotion> {
    cfg.emotion_priority.iter().copied().find(|&e| emotion_rule_holds(e, au, cfg.rules))
}

/// Streaming movement detector: feed frames in time order.
///
/// A frame without a pose breaks the differencing chain.
#[derive(Debug, Clone)]
pub struct MovementExtractor<T> {
    cfg: ExtractionConfig<T>,
    prev: Option<HeadPose<T>>,
}

impl<T: Scalar> MovementExtractor<T> {
    pub fn new(cfg: ExtractionConfig<T>) -> Self {
        Self { cfg, prev: None }
    }

    pub fn push(&mut self, frame: &FrameSample<T>) -> ArrayVec<MovementEvent<T>, 2> {
        let mut out = ArrayVec::new();
        let prev = std::mem::replace(&mut self.prev, frame.pose);
        if let (Some(prev), Some(curr)) = (prev, frame.pose) {
            for (direction, intensity) in classify_movement(pose_diff(&prev, &curr), &self.cfg) {
                out.push(MovementEvent { t: frame.t, direction, intensity });
            }
        }
        out
    }
}

/// Streaming emotion detector. Frames without an AU vector are ignored.
#[derive(Debug, Clone)]
pub struct EmotionExtractor<T> {
    cfg: ExtractionConfig<T>,
    last: Option<Emotion>,
}

impl<T: Scalar> EmotionExtractor<T> {
    pub fn new(cfg: ExtractionConfig<T>) -> Self {
        Self { cfg, last: None }
    }

    pub fn push(&mut self, frame: &FrameSample<T>) -> Option<EmotionEvent<T>> {
        let au = frame.au.as_ref()?;
        let current = classify_emotion(au, &self.cfg);
        let previous = std::mem::replace(&mut self.last, current);
        let emotion = current?;
        if self.cfg.emit_on_transition_only && previous == Some(emotion) {
            return None;
        }
        Some(EmotionEvent { t: frame.t, emotion })
    }
}

pub fn extract_movements<T: Scalar>(frames: &[FrameSample<T>], cfg: &ExtractionConfig<T>) -> Vec<MovementEvent<T>> {
    let mut extractor = MovementExtractor::new(*cfg);
    frames.iter().flat_map(|f| extractor.push(f)).collect()
}

pub fn extract_emotions<T: Scalar>(frames: &[FrameSample<T>], cfg: &ExtractionConfig<T>) -> Vec<EmotionEvent<T>> {
    let mut extractor = EmotionExtractor::new(*cfg);
    frames.iter().filter_map(|f| extractor.push(f)).collect()
}

/// Both event kinds in one pass over the stream.
pub fn extract_all<T: Scalar>(
    frames: &[FrameSample<T>],
    cfg: &ExtractionConfig<T>,
) -> (Vec<MovementEvent<T>>, Vec<EmotionEvent<T>>) {
    let mut moves = MovementExtractor::new(*cfg);
    let mut emotions = EmotionExtractor::new(*cfg);
    let mut out_moves = Vec::new();
    let mut out_emotions = Vec::new();
    for frame in frames {
        out_moves.extend(moves.push(frame));
        out_emotions.extend(emotions.push(frame));
    }
    (out_moves, out_emotions)
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::DEFAULT_THRESHOLD_DEG;
use crate::scalar::Scalar;
use crate::types::{
    AuVector, Direction, Emotion, FrameSample, GroundTruthAnnotation, HeadPose, Label, PITCH_LIMIT_DEG, YAW_LIMIT_DEG,
};

pub const DEFAULT_FRAME_RATE_HZ: f64 = 30.0;

/// Upper bound on generated frames, to keep a typo in a script from exhausting memory.
const MAX_FRAMES: f64 = 5.0e7;

fn default_frame_rate() -> f64 {
    DEFAULT_FRAME_RATE_HZ
}

/// Scripted session: head moves realized as single-frame pose steps and
/// emotion intervals realized as held AU exemplars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SyntheticScript {
    pub duration_s: f64,
    #[serde(default = "default_frame_rate")]
    pub frame_rate_hz: f64,
    #[serde(default)]
    pub moves: Vec<ScriptedMove>,
    #[serde(default)]
    pub emotions: Vec<ScriptedEmotion>,
    #[serde(default)]
    pub noise_std_deg: f64,
    /// Gaussian noise on AU weights; off unless set.
    #[serde(default)]
    pub au_noise_std: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticScript {
    pub fn new(duration_s: f64) -> Self {
        Self {
            duration_s,
            frame_rate_hz: DEFAULT_FRAME_RATE_HZ,
            moves: Vec::new(),
            emotions: Vec::new(),
            noise_std_deg: 0.0,
            au_noise_std: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScriptedMove {
    pub at_t: f64,
    pub direction: Direction,
    pub magnitude_deg: f64,
}

/// Emotion held over `[from_t, to_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScriptedEmotion {
    pub from_t: f64,
    pub to_t: f64,
    pub emotion: Emotion,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("duration must be positive and finite, got {0}")]
    InvalidDuration(f64),
    #[error("frame rate must be positive and finite, got {0}")]
    InvalidFrameRate(f64),
    #[error("noise standard deviation must be non-negative, got {0}")]
    InvalidNoise(f64),
    #[error("script would produce {0} frames")]
    TooManyFrames(f64),
    #[error("move {index}: magnitude must be positive, got {magnitude}")]
    NonPositiveMagnitude { index: usize, magnitude: f64 },
    #[error("move {index}: time {t} outside (0, duration]")]
    MoveOutOfRange { index: usize, t: f64 },
    #[error("moves {first} and {second} step the same axis at t={t}")]
    CoincidentMoves { first: usize, second: usize, t: f64 },
    #[error("move {index} drives the pose out of range at t={t}")]
    PoseOutOfRange { index: usize, t: f64 },
    #[error("emotion interval {index} [{from}, {to}) is empty or outside [0, duration]")]
    InvalidInterval { index: usize, from: f64, to: f64 },
    #[error("emotion intervals {first} and {second} overlap")]
    OverlappingIntervals { first: usize, second: usize },
    #[error("emotion intervals {first} and {second} touch with the same emotion and would read as one")]
    MergedIntervals { first: usize, second: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynthWarning {
    /// Magnitude at or below the default extraction threshold; will not be detected by default.
    BelowThreshold { index: usize, magnitude: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSession<T> {
    pub frames: Vec<FrameSample<T>>,
    pub truth: Vec<GroundTruthAnnotation<T>>,
    pub warnings: Vec<SynthWarning>,
}

/// AU weights chosen so that exactly the target emotion's rule fires and no
/// higher-priority rule does.
pub fn emotion_exemplar(emotion: Emotion) -> [f64; 6] {
    match emotion {
        Emotion::Sad => [0.0, 0.0, 0.0, 0.0, 0.5, -0.3],
        Emotion::Surprised => [0.0, 0.5, 0.0, -0.2, 0.0, 0.0],
        Emotion::Happy => [0.0, 0.0, 0.5, 0.0, 0.0, 0.0],
        Emotion::Angry => [0.0, 0.5, 0.0, 0.3, 0.0, 0.0],
    }
}

/// Pose step applied to the frame at a move's time. The extractor sees
/// `prev - curr`, so UP lowers pitch and RIGHT raises yaw.
fn step(direction: Direction, magnitude: f64) -> (f64, f64) {
    match direction {
        Direction::Up => (-magnitude, 0.0),
        Direction::Down => (magnitude, 0.0),
        Direction::Left => (0.0, -magnitude),
        Direction::Right => (0.0, magnitude),
    }
}

fn validate(script: &SyntheticScript) -> Result<Vec<SynthWarning>, SynthError> {
    let d = script.duration_s;
    if !(d.is_finite() && d > 0.0) {
        return Err(SynthError::InvalidDuration(d));
    }
    let rate = script.frame_rate_hz;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(SynthError::InvalidFrameRate(rate));
    }
    for noise in [script.noise_std_deg, script.au_noise_std] {
        if !(noise.is_finite() && noise >= 0.0) {
            return Err(SynthError::InvalidNoise(noise));
        }
    }
    if d * rate > MAX_FRAMES {
        return Err(SynthError::TooManyFrames(d * rate));
    }

    let mut warnings = Vec::new();
    for (index, m) in script.moves.iter().enumerate() {
        if !(m.magnitude_deg.is_finite() && m.magnitude_deg > 0.0) {
            return Err(SynthError::NonPositiveMagnitude { index, magnitude: m.magnitude_deg });
        }
        if !(m.at_t > 0.0 && m.at_t <= d) {
            return Err(SynthError::MoveOutOfRange { index, t: m.at_t });
        }
        if m.magnitude_deg <= DEFAULT_THRESHOLD_DEG {
            log::warn!("scripted move {index} ({}°) is not above the default threshold", m.magnitude_deg);
            warnings.push(SynthWarning::BelowThreshold { index, magnitude: m.magnitude_deg });
        }
    }
    for (i, a) in script.moves.iter().enumerate() {
        for (j, b) in script.moves.iter().enumerate().skip(i + 1) {
            if a.at_t == b.at_t && a.direction.is_vertical() == b.direction.is_vertical() {
                return Err(SynthError::CoincidentMoves { first: i, second: j, t: a.at_t });
            }
        }
    }

    for (index, e) in script.emotions.iter().enumerate() {
        if !(e.from_t >= 0.0 && e.from_t < e.to_t && e.to_t <= d) {
            return Err(SynthError::InvalidInterval { index, from: e.from_t, to: e.to_t });
        }
    }
    let mut order: Vec<usize> = (0..script.emotions.len()).collect();
    order.sort_by(|&a, &b| script.emotions[a].from_t.total_cmp(&script.emotions[b].from_t));
    for w in order.windows(2) {
        let (a, b) = (&script.emotions[w[0]], &script.emotions[w[1]]);
        let (first, second) = (w[0].min(w[1]), w[0].max(w[1]));
        if b.from_t < a.to_t {
            return Err(SynthError::OverlappingIntervals { first, second });
        }
        if b.from_t == a.to_t && a.emotion == b.emotion {
            return Err(SynthError::MergedIntervals { first, second });
        }
    }
    Ok(warnings)
}

/// Frame times: the uniform grid plus every scripted event time, so events
/// land exactly on a frame.
fn timeline(script: &SyntheticScript) -> Vec<f64> {
    let n = (script.duration_s * script.frame_rate_hz + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|i| i as f64 / script.frame_rate_hz).collect();
    times.extend(script.moves.iter().map(|m| m.at_t));
    times.extend(script.emotions.iter().flat_map(|e| [e.from_t, e.to_t]));
    times.retain(|&t| t <= script.duration_s);
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

fn clamp_abs(x: f64, limit: f64) -> f64 {
    x.clamp(-limit, limit)
}

/// Deterministic for a fixed script (including seed).
pub fn generate_synthetic<T: Scalar>(script: &SyntheticScript) -> Result<SyntheticSession<T>, SynthError> {
    let warnings = validate(script)?;

    let mut moves: Vec<(usize, &ScriptedMove)> = script.moves.iter().enumerate().collect();
    moves.sort_by(|a, b| a.1.at_t.total_cmp(&b.1.at_t));
    let mut emotions: Vec<&ScriptedEmotion> = script.emotions.iter().collect();
    emotions.sort_by(|a, b| a.from_t.total_cmp(&b.from_t));

    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
    let pose_noise = (script.noise_std_deg > 0.0).then(|| Normal::new(0.0, script.noise_std_deg).expect("validated"));
    let au_noise = (script.au_noise_std > 0.0).then(|| Normal::new(0.0, script.au_noise_std).expect("validated"));

    let mut base = (0.0f64, 0.0f64);
    let mut next_move = 0;
    let mut frames: Vec<FrameSample<T>> = Vec::new();
    for t in timeline(script) {
        while next_move < moves.len() && moves[next_move].1.at_t <= t {
            let (index, m) = moves[next_move];
            let (dp, dy) = step(m.direction, m.magnitude_deg);
            base = (base.0 + dp, base.1 + dy);
            if base.0.abs() > PITCH_LIMIT_DEG || base.1.abs() > YAW_LIMIT_DEG {
                return Err(SynthError::PoseOutOfRange { index, t: m.at_t });
            }
            next_move += 1;
        }
        let (mut pitch, mut yaw) = base;
        if let Some(noise) = &pose_noise {
            pitch = clamp_abs(pitch + noise.sample(&mut rng), PITCH_LIMIT_DEG);
            yaw = clamp_abs(yaw + noise.sample(&mut rng), YAW_LIMIT_DEG);
        }

        let mut weights = emotions
            .iter()
            .find(|e| e.from_t <= t && t < e.to_t)
            .map_or([0.0; 6], |e| emotion_exemplar(e.emotion));
        if let Some(noise) = &au_noise {
            for w in &mut weights {
                *w = clamp_abs(*w + noise.sample(&mut rng), 1.0);
            }
        }

        let t = T::lit(t);
        if frames.last().is_some_and(|f| f.t >= t) {
            // two f64 times collapsed onto one scalar value; the later one wins
            frames.pop();
        }
        let pose = HeadPose::new(T::lit(pitch), T::lit(yaw)).expect("pose clamped to limits");
        let au = AuVector::new(weights.map(T::lit)).expect("weights clamped to [-1, 1]");
        frames.push(FrameSample::new(t, Some(pose), Some(au)).expect("t is non-negative"));
    }

    let mut truth: Vec<GroundTruthAnnotation<T>> = script
        .moves
        .iter()
        .map(|m| GroundTruthAnnotation { t: T::lit(m.at_t), label: Label::Direction(m.direction) })
        .chain(script.emotions.iter().map(|e| GroundTruthAnnotation { t: T::lit(e.from_t), label: Label::Emotion(e.emotion) }))
        .collect();
    truth.sort_by(|a, b| a.t.partial_cmp(&b.t).expect("finite times"));

    Ok(SyntheticSession { frames, truth, warnings })
}

//! Head-movement and emotion event pipeline.
//!
//! Frames carrying head pose (pitch, yaw) and six facial Animation Unit
//! weights are turned into movement and emotion events, stored as JSON
//! session documents, and aggregated into chart-ready series.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`, which the CLI and HTTP service use.

pub mod aggregation;
pub mod evaluation;
pub mod extraction;
pub mod ingestion;
pub mod scalar;
pub mod session_store;
pub mod types;

pub use scalar::Scalar;
pub use types::{
    AuVector, Direction, Emotion, EmotionEvent, EventLabel, FrameSample, GroundTruthAnnotation, HeadPose, Label,
    MovementEvent, Session, SessionDate, TimeBucket, UserLabel, ValidationError,
};

pub type Pose = HeadPose<f64>;
pub type Au = AuVector<f64>;
pub type Frame = FrameSample<f64>;
pub type Movement = MovementEvent<f64>;
pub type EmotionRecord = EmotionEvent<f64>;
pub type SessionF64 = Session<f64>;
pub type Annotation = GroundTruthAnnotation<f64>;
pub type DirectionBucket = TimeBucket<f64, Direction>;
pub type EmotionBucket = TimeBucket<f64, Emotion>;
pub type Config = extraction::ExtractionConfig<f64>;

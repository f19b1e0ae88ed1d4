//! Frame sources standing in for a live sensor: line-delimited JSON replay
//! files and a seeded synthetic session generator.

mod replay;
mod synthetic;

pub use replay::{parse_replay, parse_replay_str, replay_to_string, write_replay, ReplayError, ReplayReader, ReplayRecord};
pub use synthetic::{
    generate_synthetic, emotion_exemplar, ScriptedEmotion, ScriptedMove, SynthError, SynthWarning, SyntheticScript,
    SyntheticSession, DEFAULT_FRAME_RATE_HZ,
};

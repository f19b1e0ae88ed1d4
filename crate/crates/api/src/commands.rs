//! Implementations of the CLI subcommands. Each returns the text to print on
//! stdout so the binary stays a thin argument parser.

use std::fs;
use std::path::{Path, PathBuf};

use kinvis_core::aggregation::{direction_series, emotion_series, parse_emotion_filter};
use kinvis_core::evaluation::match_events;
use kinvis_core::extraction::{extract_all, ExtractionConfig, RuleMode};
use kinvis_core::ingestion::{generate_synthetic, parse_replay, replay_to_string, SynthWarning, SyntheticScript};
use kinvis_core::session_store::{parse_sessions, DocumentKind, Registry};
use kinvis_core::{Annotation, Label, Session, SessionDate, SessionF64, UserLabel};

use crate::error::CliError;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn to_json<V: serde::Serialize>(value: &V) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}

#[derive(Debug, Clone)]
pub struct ExtractArgs {
    pub input: PathBuf,
    pub out_dir: PathBuf,
    pub user: String,
    pub date: String,
    pub threshold: f64,
    pub literal_rules: bool,
    pub per_frame: bool,
    pub overwrite: bool,
}

pub fn extract(args: &ExtractArgs) -> Result<String, CliError> {
    let user = UserLabel::new(args.user.clone()).map_err(CliError::parse)?;
    let date: SessionDate = args.date.parse().map_err(CliError::parse)?;
    let cfg = ExtractionConfig::with_threshold(args.threshold)
        .map_err(CliError::parse)?
        .rules(if args.literal_rules { RuleMode::Literal } else { RuleMode::Corrected })
        .transition_only(!args.per_frame);

    let file = fs::File::open(&args.input).map_err(|e| CliError::io(format!("{}: {e}", args.input.display())))?;
    let frames = parse_replay::<f64, _>(std::io::BufReader::new(file)).map_err(|e| match e {
        kinvis_core::ingestion::ReplayError::Io { .. } => CliError::io(format!("{}: {e}", args.input.display())),
        other => CliError::parse(format!("{}: {other}", args.input.display())),
    })?;

    let (movements, emotions) = extract_all(&frames, &cfg);
    let mut session = Session::new(date, user.as_str());
    session.movements = movements;
    session.emotions = emotions;

    let registry = Registry::create(&args.out_dir)?;
    let move_path = registry.save_session(&session, DocumentKind::Movement, args.overwrite)?;
    let emo_path = registry.save_session(&session, DocumentKind::Emotion, args.overwrite)?;
    Ok(format!(
        "frames: {}\nmovements: {} -> {}\nemotions: {} -> {}",
        frames.len(),
        session.movements.len(),
        move_path.display(),
        session.emotions.len(),
        emo_path.display()
    ))
}

pub fn synth(script: &Path, out: &Path, truth: &Path) -> Result<String, CliError> {
    let script: SyntheticScript =
        serde_json::from_str(&read(script)?).map_err(|e| CliError::parse(format!("{}: {e}", script.display())))?;
    let session = generate_synthetic::<f64>(&script).map_err(CliError::parse)?;
    write(out, &replay_to_string(&session.frames))?;
    write(truth, &to_json(&session.truth))?;
    let mut report = format!("frames: {}\nannotations: {}", session.frames.len(), session.truth.len());
    for w in &session.warnings {
        let SynthWarning::BelowThreshold { index, magnitude } = w;
        report.push_str(&format!("\nwarning: move {index} magnitude {magnitude} is not above the default threshold"));
    }
    Ok(report)
}

/// Reads a session document of either kind.
fn parse_any_document(text: &str) -> Result<(DocumentKind, Vec<SessionF64>), CliError> {
    match parse_sessions::<f64>(text, DocumentKind::Movement) {
        Ok(s) => Ok((DocumentKind::Movement, s)),
        Err(move_err) => parse_sessions::<f64>(text, DocumentKind::Emotion)
            .map(|s| (DocumentKind::Emotion, s))
            .map_err(|emo_err| {
                CliError::parse(format!("not a movement document ({move_err}) nor an emotion document ({emo_err})"))
            }),
    }
}

pub fn evaluate(extracted: &Path, truth: &Path, tolerance: f64) -> Result<String, CliError> {
    let (kind, sessions) = parse_any_document(&read(extracted)?)
        .map_err(|e| CliError::parse(format!("{}: {e}", extracted.display())))?;
    let annotations: Vec<Annotation> =
        serde_json::from_str(&read(truth)?).map_err(|e| CliError::parse(format!("{}: {e}", truth.display())))?;

    let mut events: Vec<(f64, Label)> = sessions
        .iter()
        .flat_map(|s| {
            s.movements
                .iter()
                .map(|m| (m.t, Label::Direction(m.direction)))
                .chain(s.emotions.iter().map(|e| (e.t, Label::Emotion(e.emotion))))
        })
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let relevant: Vec<Annotation> = annotations
        .into_iter()
        .filter(|a| matches!((kind, a.label), (DocumentKind::Movement, Label::Direction(_)) | (DocumentKind::Emotion, Label::Emotion(_))))
        .collect();

    let report = match_events(&events, &relevant, tolerance).map_err(CliError::parse)?;
    Ok(serde_json::to_string(&report.summary()).expect("summary serializes"))
}

pub fn aggregate(registry: &Path, kind: DocumentKind, width: f64, filter: Option<&str>) -> Result<String, CliError> {
    let registry = Registry::open(registry)?;
    let sessions = registry.load_all::<f64>(kind)?;
    let text = match kind {
        DocumentKind::Movement => to_json(&direction_series(&sessions, width).map_err(CliError::parse)?),
        DocumentKind::Emotion => {
            let filter = filter.map(parse_emotion_filter).transpose().map_err(CliError::parse)?;
            to_json(&emotion_series(&sessions, width, filter.as_deref()).map_err(CliError::parse)?)
        }
    };
    Ok(text)
}

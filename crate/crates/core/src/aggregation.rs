//! Chart-ready series: per-user scatter points and fixed-width time buckets
//! keyed by direction or emotion.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::types::{Direction, Emotion, EventLabel, Session, TimeBucket, UnknownLabel};

pub const DEFAULT_BUCKET_WIDTH_S: f64 = 2.0;

/// Refuse to allocate more buckets than this for one request.
const MAX_BUCKETS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregationError {
    #[error("bucket width must be positive and finite, got {0}")]
    NonPositiveWidth(f64),
    #[error("event time {0} is negative or not finite")]
    InvalidTime(f64),
    #[error("range needs {0} buckets, more than the supported maximum")]
    TooManyBuckets(f64),
    #[error(transparent)]
    UnknownLabel(#[from] UnknownLabel),
}

/// Index `k` of the bucket `[k*w, (k+1)*w)` containing `t`, consistent with
/// the bucket start values actually reported.
fn bucket_index<T: Scalar>(t: T, width: T) -> Result<usize, AggregationError> {
    let mut k = (t / width).floor();
    if (k + T::one()) * width <= t {
        k = k + T::one();
    } else if k * width > t {
        k = k - T::one();
    }
    k.to_usize()
        .filter(|&k| k < MAX_BUCKETS)
        .ok_or_else(|| AggregationError::TooManyBuckets(k.to_f64_lossy()))
}

fn check_width<T: Scalar>(width: T) -> Result<(), AggregationError> {
    if width.is_finite() && width > T::zero() {
        Ok(())
    } else {
        Err(AggregationError::NonPositiveWidth(width.to_f64_lossy()))
    }
}

/// Buckets every event, reporting a count for each of `labels`. Events with
/// other labels are not counted but still extend the bucket range.
pub fn bucket_events_for<T: Scalar, L: EventLabel>(
    events: &[(T, L)],
    width: T,
    labels: &[L],
) -> Result<Vec<TimeBucket<T, L>>, AggregationError> {
    check_width(width)?;
    let mut indices = Vec::with_capacity(events.len());
    for &(t, label) in events {
        if !(t.is_finite() && t >= T::zero()) {
            return Err(AggregationError::InvalidTime(t.to_f64_lossy()));
        }
        indices.push((bucket_index(t, width)?, label));
    }
    let Some(last) = indices.iter().map(|&(k, _)| k).max() else {
        return Ok(Vec::new());
    };
    let zero: BTreeMap<L, u64> = labels.iter().map(|&l| (l, 0)).collect();
    let mut buckets: Vec<TimeBucket<T, L>> = (0..=last)
        .map(|k| TimeBucket { start_t: T::lit(k as f64) * width, width, counts: zero.clone() })
        .collect();
    for (k, label) in indices {
        if let Some(count) = buckets[k].counts.get_mut(&label) {
            *count += 1;
        }
    }
    Ok(buckets)
}

/// Buckets `[k*width, (k+1)*width)` from 0 through the last event, each with a
/// count for every label value. An event on a boundary goes to the later bucket.
pub fn bucket_events<T: Scalar, L: EventLabel>(
    events: &[(T, L)],
    width: T,
) -> Result<Vec<TimeBucket<T, L>>, AggregationError> {
    bucket_events_for(events, width, L::ALL)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, bound(deserialize = "T: Scalar", serialize = "T: Scalar"))]
pub struct ScatterPoint<T> {
    pub t: T,
    pub direction: Direction,
    pub intensity: T,
    /// Intensity divided by the largest intensity in the request, in `[0, 1]`.
    pub color_rank: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, bound(deserialize = "T: Scalar", serialize = "T: Scalar"))]
pub struct ScatterSeries<T> {
    pub user_label: String,
    pub points: Vec<ScatterPoint<T>>,
}

/// One series per user (sorted by label), points ordered by time. Sessions of
/// the same user on different dates are merged.
pub fn scatter_series<T: Scalar>(sessions: &[Session<T>]) -> Vec<ScatterSeries<T>> {
    let max = sessions
        .iter()
        .flat_map(|s| s.movements.iter().map(|m| m.intensity))
        .fold(T::zero(), T::max);
    let mut by_user: BTreeMap<&str, Vec<ScatterPoint<T>>> = BTreeMap::new();
    for s in sessions {
        let points = by_user.entry(&s.user_label).or_default();
        points.extend(s.movements.iter().map(|m| ScatterPoint {
            t: m.t,
            direction: m.direction,
            intensity: m.intensity,
            color_rank: if max > T::zero() { m.intensity / max } else { T::zero() },
        }));
    }
    by_user
        .into_iter()
        .map(|(user, mut points)| {
            points.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap_or(std::cmp::Ordering::Equal));
            ScatterSeries { user_label: user.to_owned(), points }
        })
        .collect()
}

/// Movement counts per bucket, summed over all sessions.
pub fn direction_series<T: Scalar>(
    sessions: &[Session<T>],
    width: T,
) -> Result<Vec<TimeBucket<T, Direction>>, AggregationError> {
    let events: Vec<(T, Direction)> =
        sessions.iter().flat_map(|s| s.movements.iter().map(|m| (m.t, m.direction))).collect();
    bucket_events(&events, width)
}

/// Emotion counts per bucket, summed over all sessions. With a filter only the
/// listed emotions are counted; the bucket range still covers every event.
pub fn emotion_series<T: Scalar>(
    sessions: &[Session<T>],
    width: T,
    filter: Option<&[Emotion]>,
) -> Result<Vec<TimeBucket<T, Emotion>>, AggregationError> {
    let events: Vec<(T, Emotion)> =
        sessions.iter().flat_map(|s| s.emotions.iter().map(|e| (e.t, e.emotion))).collect();
    bucket_events_for(&events, width, filter.unwrap_or(Emotion::ALL))
}

/// Parses a comma-separated emotion filter such as `HAPPY,ANGRY`.
pub fn parse_emotion_filter(text: &str) -> Result<Vec<Emotion>, AggregationError> {
    let mut out: Vec<Emotion> = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let e: Emotion = part.parse()?;
        if !out.contains(&e) {
            out.push(e);
        }
    }
    Ok(out)
}

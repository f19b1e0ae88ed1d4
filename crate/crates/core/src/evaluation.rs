//! Scoring extracted events against ground-truth annotations.
//!
//! Matching is per label: both lists are walked in time order and a pair is
//! matched when the labels agree and the times are within tolerance. For
//! points on a line this greedy walk finds a maximum matching, so widening the
//! tolerance never loses matches and swapping the two lists only swaps
//! `missed` and `spurious`.
//!
//! Accuracy is `matched / (matched + missed + spurious) * 100`, taken as 100
//! when all three are zero.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::types::{GroundTruthAnnotation, Label};

pub const DEFAULT_TOLERANCE_S: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluationError {
    #[error("tolerance must be a non-negative finite number, got {0}")]
    InvalidTolerance(f64),
}

/// Indices into the extracted and truth lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub extracted: usize,
    pub truth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MatchReport {
    pub matches: Vec<MatchedPair>,
    /// Truth indices left unmatched.
    pub missed: Vec<usize>,
    /// Extracted indices left unmatched.
    pub spurious: Vec<usize>,
}

/// Printable summary of a [`MatchReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AccuracySummary {
    pub matched: usize,
    pub missed: usize,
    pub spurious: usize,
    pub accuracy_pct: f64,
}

impl MatchReport {
    pub fn summary(&self) -> AccuracySummary {
        AccuracySummary {
            matched: self.matches.len(),
            missed: self.missed.len(),
            spurious: self.spurious.len(),
            accuracy_pct: accuracy(self),
        }
    }
}

pub fn accuracy(report: &MatchReport) -> f64 {
    accuracy_from_counts(report.matches.len(), report.missed.len(), report.spurious.len())
}

pub fn accuracy_from_counts(matched: usize, missed: usize, spurious: usize) -> f64 {
    let total = matched + missed + spurious;
    if total == 0 {
        100.0
    } else {
        matched as f64 / total as f64 * 100.0
    }
}

fn by_label<T: Scalar>(events: &[(T, Label)]) -> BTreeMap<Label, Vec<usize>> {
    let mut groups: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for (i, &(_, label)) in events.iter().enumerate() {
        groups.entry(label).or_default().push(i);
    }
    for idx in groups.values_mut() {
        idx.sort_by(|&a, &b| events[a].0.partial_cmp(&events[b].0).unwrap_or(std::cmp::Ordering::Equal));
    }
    groups
}

pub fn match_events<T: Scalar>(
    extracted: &[(T, Label)],
    truth: &[GroundTruthAnnotation<T>],
    tolerance_s: T,
) -> Result<MatchReport, EvaluationError> {
    if !(tolerance_s.is_finite() && tolerance_s >= T::zero()) {
        return Err(EvaluationError::InvalidTolerance(tolerance_s.to_f64_lossy()));
    }
    let truth_pairs: Vec<(T, Label)> = truth.iter().map(|a| (a.t, a.label)).collect();
    let ext_groups = by_label(extracted);
    let mut truth_groups = by_label(&truth_pairs);

    let mut report = MatchReport::default();
    for (label, ext_idx) in &ext_groups {
        let truth_idx = truth_groups.remove(label).unwrap_or_default();
        let (mut i, mut j) = (0, 0);
        while i < ext_idx.len() && j < truth_idx.len() {
            let (e, t) = (ext_idx[i], truth_idx[j]);
            let (te, tt) = (extracted[e].0, truth_pairs[t].0);
            if (te - tt).abs() <= tolerance_s {
                report.matches.push(MatchedPair { extracted: e, truth: t });
                i += 1;
                j += 1;
            } else if te < tt {
                report.spurious.push(e);
                i += 1;
            } else {
                report.missed.push(t);
                j += 1;
            }
        }
        report.spurious.extend_from_slice(&ext_idx[i..]);
        report.missed.extend_from_slice(&truth_idx[j..]);
    }
    for idx in truth_groups.into_values() {
        report.missed.extend(idx);
    }
    report.matches.sort_by_key(|m| m.truth);
    report.missed.sort_unstable();
    report.spurious.sort_unstable();
    Ok(report)
}

//! Group member entropy and loyalty features.
//!
//! "Active member" of a group means a user with at least one training RSVP
//! to that group's events. All functions here are pure over an immutable
//! training split.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{Error, Result};

/// How the per-member attendance probability feeding the entropy is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntropyMode {
    /// Default: each active member's share of the group's total attendance.
    PerUserShare,
    /// Comparison variant: one scalar, distinct attendees over total
    /// attendance, applied to every active member.
    LiteralScalar,
}

impl Default for EntropyMode {
    fn default() -> Self {
        EntropyMode::PerUserShare
    }
}

/// Attendance shares over a group's active members; shares sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AttendanceDistribution {
    /// (user position, share), ordered by user id for determinism.
    pub shares: Vec<(usize, f64)>,
}

/// User positions of a group's active members, ordered by user id.
pub fn active_members(group_pos: usize, train: &Dataset) -> Vec<usize> {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &ev in train.group_events(group_pos) {
        for &ri in train.event_rsvps(ev) {
            let up = train.user_index(&train.rsvps()[ri].user_id).unwrap();
            *counts.entry(up).or_insert(0) += 1;
        }
    }
    let mut members: Vec<usize> = counts.into_keys().collect();
    members.sort_by(|&a, &b| train.users()[a].user_id.cmp(&train.users()[b].user_id));
    members
}

/// Share of the group's total attendance contributed by each active member.
pub fn attendance_distribution(group_pos: usize, train: &Dataset) -> Result<AttendanceDistribution> {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    let mut total = 0usize;
    for &ev in train.group_events(group_pos) {
        for &ri in train.event_rsvps(ev) {
            let up = train.user_index(&train.rsvps()[ri].user_id).unwrap();
            *counts.entry(up).or_insert(0) += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::EmptyInput(format!(
            "empty attendance for group {}",
            train.groups()[group_pos].group_id
        )));
    }
    let mut shares: Vec<(usize, f64)> = counts
        .into_iter()
        .map(|(up, c)| (up, c as f64 / total as f64))
        .collect();
    shares.sort_by(|a, b| train.users()[a.0].user_id.cmp(&train.users()[b.0].user_id));
    Ok(AttendanceDistribution { shares })
}

/// Shannon entropy (natural log) of an attendance distribution.
pub fn group_entropy(d: &AttendanceDistribution) -> f64 {
    -d.shares
        .iter()
        .map(|&(_, p)| if p > 0.0 { p * p.ln() } else { 0.0 })
        .sum::<f64>()
}

/// The literal scalar variant: distinct attendees over total attendance,
/// summed as if every active member carried that same probability.
pub fn group_entropy_literal(group_pos: usize, train: &Dataset) -> Result<f64> {
    let dist = attendance_distribution(group_pos, train)?;
    let distinct = dist.shares.len() as f64;
    let mut attendance = 0usize;
    for &ev in train.group_events(group_pos) {
        attendance += train.event_rsvps(ev).len();
    }
    let p = distinct / attendance as f64;
    Ok(-(distinct * p * p.ln()))
}

/// Fraction of the user's attended training events that share the group's
/// category.
pub fn user_loyalty(user_pos: usize, group_pos: usize, train: &Dataset) -> Result<f64> {
    let attended = train.user_events(user_pos);
    if attended.is_empty() {
        return Err(Error::EmptyInput(format!(
            "user {} has no attendance history",
            train.users()[user_pos].user_id
        )));
    }
    let cat = &train.groups()[group_pos].category;
    let same = attended
        .iter()
        .filter(|&&ev| train.event_category(ev) == cat)
        .count();
    Ok(same as f64 / attended.len() as f64)
}

/// Mean user loyalty over the group's active members.
pub fn group_loyalty(group_pos: usize, train: &Dataset) -> Result<f64> {
    let members = active_members(group_pos, train);
    let loyalties: Vec<f64> = members
        .iter()
        .filter_map(|&up| user_loyalty(up, group_pos, train).ok())
        .collect();
    if loyalties.is_empty() {
        return Err(Error::EmptyInput(format!(
            "group {} has no active members",
            train.groups()[group_pos].group_id
        )));
    }
    Ok(loyalties.iter().sum::<f64>() / loyalties.len() as f64)
}

/// Entropy and loyalty for one group under the configured entropy mode.
pub fn group_features(group_pos: usize, train: &Dataset, mode: EntropyMode) -> Result<(f64, f64)> {
    let entropy = match mode {
        EntropyMode::PerUserShare => group_entropy(&attendance_distribution(group_pos, train)?),
        EntropyMode::LiteralScalar => group_entropy_literal(group_pos, train)?,
    };
    Ok((entropy, group_loyalty(group_pos, train)?))
}

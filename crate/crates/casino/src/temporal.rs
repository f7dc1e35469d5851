//! Hour-of-week event encoding, time-decayed user temporal profiles, and
//! group temporal satisfaction.
//!
//! Local time comes from a fixed per-city UTC offset; DST is ignored.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;

pub const SLOTS: usize = 168;
const SECONDS_PER_DAY: i64 = 86_400;
/// The unix epoch fell on a Thursday; Monday is day 0 here.
const EPOCH_WEEKDAY: i64 = 3;

/// 168 nonnegative reals indexed by hour-of-week
/// (`day_of_week * 24 + hour`, Monday = day 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeVector(pub Vec<f64>);

impl TimeVector {
    pub fn zeros() -> TimeVector {
        TimeVector(vec![0.0; SLOTS])
    }

    pub fn one_hot(slot: usize) -> TimeVector {
        let mut v = vec![0.0; SLOTS];
        v[slot] = 1.0;
        TimeVector(v)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }
}

/// Exponential-style attendance decay with rate `eta`, measured in whole
/// days back from `reference_time` (the end of the training window).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    pub eta: f64,
    pub reference_time: i64,
}

impl DecayConfig {
    pub fn weight(&self, days_back: i64) -> f64 {
        1.0 / (1.0 + self.eta).powi(days_back.max(0) as i32)
    }
}

/// Hour-of-week slot of a UTC timestamp under a fixed city offset.
pub fn hour_of_week(utc_seconds: i64, city_offset_seconds: i64) -> usize {
    let local = utc_seconds + city_offset_seconds;
    let days = local.div_euclid(SECONDS_PER_DAY);
    let secs = local.rem_euclid(SECONDS_PER_DAY);
    let weekday = (days + EPOCH_WEEKDAY).rem_euclid(7);
    (weekday * 24 + secs / 3_600) as usize
}

/// One-hot vector at the event's local hour-of-week slot.
pub fn event_time_vector(start_time: i64, city_offset_seconds: i64) -> TimeVector {
    TimeVector::one_hot(hour_of_week(start_time, city_offset_seconds))
}

/// Decay-weighted average of the one-hot vectors of the user's attended
/// training events. Returns the zero vector with the cold-start flag set
/// when the user has no history.
pub fn user_time_profile(
    user_pos: usize,
    train: &Dataset,
    cfg: &DecayConfig,
    city_offset_seconds: i64,
) -> (TimeVector, bool) {
    let attended = train.user_events(user_pos);
    if attended.is_empty() {
        return (TimeVector::zeros(), true);
    }
    let mut v = vec![0.0; SLOTS];
    for &ev in attended {
        let start = train.events()[ev].start_time;
        let days_back = (cfg.reference_time - start).div_euclid(SECONDS_PER_DAY);
        let slot = hour_of_week(start, city_offset_seconds);
        v[slot] += cfg.weight(days_back);
    }
    let n = attended.len() as f64;
    for x in &mut v {
        *x /= n;
    }
    (TimeVector(v), false)
}

/// Generalized Jaccard similarity: sum of elementwise minima over sum of
/// elementwise maxima. Zero when both vectors are all-zero. Coincides with
/// set Jaccard on binary inputs.
pub fn weighted_jaccard(a: &TimeVector, b: &TimeVector) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..SLOTS {
        num += a.0[i].min(b.0[i]);
        den += a.0[i].max(b.0[i]);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Sum of Jaccard similarities between the event's time vector and the
/// profiles of the group's active members. Cold-start profiles contribute 0.
pub fn temporal_satisfaction(event_vector: &TimeVector, member_profiles: &[TimeVector]) -> f64 {
    member_profiles
        .iter()
        .map(|p| weighted_jaccard(event_vector, p))
        .sum()
}

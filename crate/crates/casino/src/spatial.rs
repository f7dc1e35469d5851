//! Geospatial neighborhood counting, inter-category attractiveness,
//! location quality, and location competitiveness.
//!
//! The index is a uniform lat/lon grid used as a candidate filter; every
//! returned point is verified by haversine with a strict `< radius` test,
//! so radius queries are exactly equivalent to a brute-force scan.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{haversine, Dataset, EARTH_RADIUS_METERS};
use crate::{Error, Result};

pub const METERS_PER_DEGREE: f64 = EARTH_RADIUS_METERS * std::f64::consts::PI / 180.0;

/// Miles-to-meters conversion used for the competitiveness radius.
pub const METERS_PER_MILE: f64 = 1_609.344;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialConfig {
    /// Neighborhood radius for event-to-event counts, meters.
    pub r_meters: f64,
    /// Competitiveness radius for user homes, meters (1.5 miles default).
    pub big_r_meters: f64,
}

impl Default for SpatialConfig {
    fn default() -> Self {
        SpatialConfig {
            r_meters: 100.0,
            big_r_meters: 1.5 * METERS_PER_MILE,
        }
    }
}

impl SpatialConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_meters > 0.0 && self.r_meters < self.big_r_meters) {
            return Err(Error::Config(format!(
                "spatial radii must satisfy 0 < r < R, got r = {}, R = {}",
                self.r_meters, self.big_r_meters
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexedPoint {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    /// Free-form label; the category id for event indexes.
    pub tag: String,
}

/// Uniform lat/lon grid over bucketed points.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<IndexedPoint>,
    cell_lat_deg: f64,
    cell_lon_deg: f64,
    grid: HashMap<(i64, i64), Vec<u32>>,
}

impl SpatialIndex {
    /// Builds the grid with cell size derived from the intended query radius.
    pub fn build(points: Vec<IndexedPoint>, radius_meters: f64) -> SpatialIndex {
        let cell_lat_deg = (radius_meters / METERS_PER_DEGREE).max(1e-9);
        let max_abs_lat = points
            .iter()
            .map(|p| p.lat.abs())
            .fold(0.0f64, f64::max)
            .min(89.9);
        let cos_ref = max_abs_lat.to_radians().cos().max(1e-3);
        let cell_lon_deg = (radius_meters / (METERS_PER_DEGREE * cos_ref)).max(1e-9);
        let mut grid: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            let key = (
                (p.lat / cell_lat_deg).floor() as i64,
                (p.lon / cell_lon_deg).floor() as i64,
            );
            grid.entry(key).or_default().push(i as u32);
        }
        SpatialIndex {
            points,
            cell_lat_deg,
            cell_lon_deg,
            grid,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, pos: usize) -> &IndexedPoint {
        &self.points[pos]
    }

    /// Positions of all points strictly within `radius_meters` of the query,
    /// ascending. The grid prunes candidates; haversine decides.
    pub fn query(&self, lat: f64, lon: f64, radius_meters: f64) -> Vec<usize> {
        if self.points.is_empty() || radius_meters <= 0.0 {
            return Vec::new();
        }
        // Exact degree bounds containing the metric disk, plus a hair of slack.
        let lat_span = radius_meters / METERS_PER_DEGREE + 1e-12;
        let lat_lo = (lat - lat_span).max(-90.0);
        let lat_hi = (lat + lat_span).min(90.0);
        let min_cos = lat_lo
            .abs()
            .max(lat_hi.abs())
            .min(89.999_999)
            .to_radians()
            .cos()
            .max(1e-9);
        let half_angle = (radius_meters / (2.0 * EARTH_RADIUS_METERS)).sin() / min_cos;
        let lon_span = if half_angle >= 1.0 {
            180.0
        } else {
            2.0 * half_angle.asin().to_degrees() + 1e-12
        };
        let lon_lo = lon - lon_span;
        let lon_hi = lon + lon_span;

        let ci_lo = (lat_lo / self.cell_lat_deg).floor() as i64;
        let ci_hi = (lat_hi / self.cell_lat_deg).floor() as i64;
        let cj_lo = (lon_lo / self.cell_lon_deg).floor() as i64;
        let cj_hi = (lon_hi / self.cell_lon_deg).floor() as i64;

        let mut out = Vec::new();
        for ci in ci_lo..=ci_hi {
            for cj in cj_lo..=cj_hi {
                if let Some(bucket) = self.grid.get(&(ci, cj)) {
                    for &pos in bucket {
                        let p = &self.points[pos as usize];
                        if haversine((lat, lon), (p.lat, p.lon)) < radius_meters {
                            out.push(pos as usize);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Builds an index over a dataset's event venues, tagged by category.
pub fn build_event_index(d: &Dataset, radius_meters: f64) -> SpatialIndex {
    let points = d
        .events()
        .iter()
        .enumerate()
        .map(|(i, e)| IndexedPoint {
            id: e.event_id.clone(),
            lat: e.venue_lat,
            lon: e.venue_lon,
            tag: d.event_category(i).to_string(),
        })
        .collect();
    SpatialIndex::build(points, radius_meters)
}

/// Builds an index over user home locations.
pub fn build_user_home_index(d: &Dataset, radius_meters: f64) -> SpatialIndex {
    let points = d
        .users()
        .iter()
        .map(|u| IndexedPoint {
            id: u.user_id.clone(),
            lat: u.home_lat,
            lon: u.home_lon,
            tag: String::new(),
        })
        .collect();
    SpatialIndex::build(points, radius_meters)
}

/// Number of indexed points strictly within `r` of the anchor, excluding the
/// anchor itself when its id is present.
pub fn neighborhood_count(
    idx: &SpatialIndex,
    lat: f64,
    lon: f64,
    exclude_id: Option<&str>,
    r: f64,
) -> usize {
    idx.query(lat, lon, r)
        .into_iter()
        .filter(|&p| exclude_id != Some(idx.point(p).id.as_str()))
        .count()
}

/// Same as [`neighborhood_count`] restricted to points tagged `category`.
pub fn neighborhood_count_by_category(
    idx: &SpatialIndex,
    lat: f64,
    lon: f64,
    exclude_id: Option<&str>,
    r: f64,
    category: &str,
) -> usize {
    idx.query(lat, lon, r)
        .into_iter()
        .filter(|&p| {
            let pt = idx.point(p);
            pt.tag == category && exclude_id != Some(pt.id.as_str())
        })
        .count()
}

/// Total and per-category neighbor counts around one anchor.
fn neighborhood_profile(
    idx: &SpatialIndex,
    lat: f64,
    lon: f64,
    exclude_id: Option<&str>,
    r: f64,
    cat_index: &HashMap<&str, usize>,
) -> (usize, Vec<usize>) {
    let mut counts = vec![0usize; cat_index.len()];
    let mut total = 0usize;
    for p in idx.query(lat, lon, r) {
        let pt = idx.point(p);
        if exclude_id == Some(pt.id.as_str()) {
            continue;
        }
        total += 1;
        if let Some(&c) = cat_index.get(pt.tag.as_str()) {
            counts[c] += 1;
        }
    }
    (total, counts)
}

/// Pairwise category attraction values with per-anchor-category baseline
/// neighbor means, built on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractivenessMatrix {
    pub categories: Vec<String>,
    pub r_meters: f64,
    /// Row-major `attr[a * k + b]` = attraction of category `a` on `b`.
    pub attr: Vec<f64>,
    /// Row-major `mean_nc[anchor * k + c]` = mean neighbor count of category
    /// `c` around events whose own category is `anchor`.
    pub mean_nc: Vec<f64>,
    /// Pairs that fell back to the neutral value 1.0.
    pub degenerate: Vec<bool>,
}

impl AttractivenessMatrix {
    pub fn category_index(&self, category: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == category)
    }

    pub fn attr(&self, a: usize, b: usize) -> f64 {
        self.attr[a * self.categories.len() + b]
    }

    pub fn mean_nc(&self, anchor: usize, c: usize) -> f64 {
        self.mean_nc[anchor * self.categories.len() + c]
    }

    pub fn is_degenerate(&self, a: usize, b: usize) -> bool {
        self.degenerate[a * self.categories.len() + b]
    }
}

/// Attraction of category `a` on category `b` from per-anchor profiles.
///
/// Anchors whose denominator `N(e,r) - N_b(e,r)` is zero are skipped; empty
/// categories and single-category datasets collapse to the neutral 1.0 with
/// the degenerate flag set.
fn attr_from_profiles(
    profiles: &[(usize, Vec<usize>)],
    anchor_cats: &[usize],
    n_total: usize,
    cat_sizes: &[usize],
    a: usize,
    b: usize,
) -> (f64, bool) {
    let n_a = cat_sizes[a];
    let n_b = cat_sizes[b];
    if n_a == 0 || n_b == 0 {
        return (1.0, true);
    }
    if n_total == n_a {
        return (1.0, true);
    }
    let mut sum = 0.0;
    let mut any = false;
    for (i, &(total, ref counts)) in profiles.iter().enumerate() {
        if anchor_cats[i] != a {
            continue;
        }
        let denom = total as f64 - counts[b] as f64;
        if denom == 0.0 {
            continue;
        }
        sum += counts[a] as f64 / denom;
        any = true;
    }
    if !any {
        return (1.0, true);
    }
    let value = (n_total - n_a) as f64 / (n_a as f64 * n_b as f64) * sum;
    (value, false)
}

fn event_profiles(
    d: &Dataset,
    idx: &SpatialIndex,
    r: f64,
    cat_index: &HashMap<&str, usize>,
) -> Vec<(usize, Vec<usize>)> {
    (0..d.events().len())
        .into_par_iter()
        .map(|i| {
            let e = &d.events()[i];
            neighborhood_profile(
                idx,
                e.venue_lat,
                e.venue_lon,
                Some(e.event_id.as_str()),
                r,
                cat_index,
            )
        })
        .collect()
}

/// Builds the full attraction matrix and baseline means on a training split.
pub fn build_attractiveness_matrix(train: &Dataset, r: f64) -> AttractivenessMatrix {
    let categories: Vec<String> = train.categories().to_vec();
    let k = categories.len();
    let cat_index: HashMap<&str, usize> = categories
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let idx = build_event_index(train, r);
    let profiles = event_profiles(train, &idx, r, &cat_index);
    let anchor_cats: Vec<usize> = (0..train.events().len())
        .map(|i| cat_index[train.event_category(i)])
        .collect();
    let mut cat_sizes = vec![0usize; k];
    for &c in &anchor_cats {
        cat_sizes[c] += 1;
    }
    let n_total = train.events().len();

    let mut attr = vec![1.0; k * k];
    let mut degenerate = vec![false; k * k];
    for a in 0..k {
        for b in 0..k {
            let (v, flag) =
                attr_from_profiles(&profiles, &anchor_cats, n_total, &cat_sizes, a, b);
            attr[a * k + b] = v;
            degenerate[a * k + b] = flag;
        }
    }
    let mut mean_nc = vec![0.0; k * k];
    for anchor in 0..k {
        if cat_sizes[anchor] == 0 {
            continue;
        }
        for c in 0..k {
            let sum: f64 = profiles
                .iter()
                .enumerate()
                .filter(|(i, _)| anchor_cats[*i] == anchor)
                .map(|(_, (_, counts))| counts[c] as f64)
                .sum();
            mean_nc[anchor * k + c] = sum / cat_sizes[anchor] as f64;
        }
    }
    AttractivenessMatrix {
        categories,
        r_meters: r,
        attr,
        mean_nc,
        degenerate,
    }
}

/// Attraction of `cat_a` on `cat_b` over a training split at radius `r`.
/// Returns the value and a degenerate-pair flag.
pub fn attractiveness(train: &Dataset, cat_a: &str, cat_b: &str, r: f64) -> (f64, bool) {
    let m = build_attractiveness_matrix(train, r);
    match (m.category_index(cat_a), m.category_index(cat_b)) {
        (Some(a), Some(b)) => (m.attr(a, b), m.is_degenerate(a, b)),
        _ => (1.0, true),
    }
}

const LOG_CLAMP: f64 = 1e-9;

/// Location quality of an event venue against an attraction matrix:
/// sum over other categories of log attraction times the neighbor-count
/// deviation from that category pair's baseline mean.
///
/// Returns the score and a flag set when the event's category is missing
/// from the matrix (all terms skipped).
pub fn location_quality(
    lat: f64,
    lon: f64,
    event_id: Option<&str>,
    event_category: &str,
    m: &AttractivenessMatrix,
    idx: &SpatialIndex,
) -> (f64, bool) {
    let anchor = match m.category_index(event_category) {
        Some(a) => a,
        None => return (0.0, true),
    };
    let cat_index: HashMap<&str, usize> = m
        .categories
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let (_, counts) = neighborhood_profile(idx, lat, lon, event_id, m.r_meters, &cat_index);
    let mut sum = 0.0;
    for c in 0..m.categories.len() {
        if c == anchor {
            continue;
        }
        let a = m.attr(c, anchor).max(LOG_CLAMP);
        sum += a.ln() * (counts[c] as f64 - m.mean_nc(anchor, c));
    }
    (sum, false)
}

/// Location competitiveness: negative share of users within `big_r` whose
/// joined groups include the event's category. Returns 0 with the flag set
/// when no users live within range.
pub fn location_competitiveness(
    lat: f64,
    lon: f64,
    user_idx: &SpatialIndex,
    big_r: f64,
    in_category: impl Fn(&str) -> bool,
) -> (f64, bool) {
    let nearby = user_idx.query(lat, lon, big_r);
    if nearby.is_empty() {
        return (0.0, true);
    }
    let in_cat = nearby
        .iter()
        .filter(|&&p| in_category(user_idx.point(p).id.as_str()))
        .count();
    (-(in_cat as f64) / nearby.len() as f64, false)
}

/// Per-user sets of the categories reachable through joined groups.
pub fn user_category_sets(d: &Dataset) -> HashMap<String, std::collections::HashSet<String>> {
    d.users()
        .iter()
        .map(|u| {
            let cats = u
                .joined_groups
                .iter()
                .filter_map(|g| d.group_index(g))
                .map(|gp| d.groups()[gp].category.clone())
                .collect();
            (u.user_id.clone(), cats)
        })
        .collect()
}

//! Group-differentiated social influence propagation: per-event RSVP DAGs,
//! propagation-time estimation, direct credits, total-influence
//! propagation, and seed-based event influence features.
//!
//! Per-event DAGs are the transitive tournament over RSVPs ordered by
//! (rsvp_time, user_id); the id tie-break makes the ordering total and
//! deterministic. Same-group and cross-group historical co-attendance are
//! weighted by separate lambdas.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;

/// Fallback mean propagation time (7 days) for pairs without usable
/// co-history.
pub const DEFAULT_TAU_FALLBACK: f64 = 604_800.0;

pub const DEFAULT_SEED_HORIZON_SECS: i64 = 86_400;

/// Exponential influence decay over the elapsed seconds between two RSVPs.
pub fn influence_decay(delta_secs: f64, tau: f64) -> f64 {
    (-delta_secs / tau).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfluenceParams {
    /// Weight on co-history organized by the same group as the event.
    pub lambda_same: f64,
    /// Weight on co-history from other groups.
    pub lambda_cross: f64,
    /// Residual-model intercept.
    pub alpha: f64,
    /// Residual-model slope on the event influence feature.
    pub beta: f64,
    pub seed_horizon_secs: i64,
}

impl Default for InfluenceParams {
    fn default() -> Self {
        InfluenceParams {
            lambda_same: 1.0,
            lambda_cross: 1.0,
            alpha: 0.0,
            beta: 0.0,
            seed_horizon_secs: DEFAULT_SEED_HORIZON_SECS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DagNode {
    pub user_pos: usize,
    pub time: i64,
}

/// RSVP-time-ordered DAG for one event. Edges are implicit: v -> u for every
/// pair where v precedes u in the total (time, user_id) order.
#[derive(Debug, Clone, PartialEq)]
pub struct RsvpDag {
    pub nodes: Vec<DagNode>,
}

impl RsvpDag {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// In-neighbor count of the node at `rank` (everyone before it).
    pub fn predecessors(&self, rank: usize) -> usize {
        rank
    }

    pub fn rank_of(&self, user_pos: usize) -> Option<usize> {
        self.nodes.iter().position(|n| n.user_pos == user_pos)
    }
}

/// DAG over an event's RSVPs, optionally restricted to an allowed user set.
pub fn build_rsvp_dag(
    d: &Dataset,
    event_pos: usize,
    allowed: Option<&HashSet<usize>>,
) -> RsvpDag {
    let nodes = d
        .event_rsvps(event_pos)
        .iter()
        .map(|&ri| {
            let r = &d.rsvps()[ri];
            DagNode {
                user_pos: d.user_index(&r.user_id).unwrap(),
                time: r.rsvp_time,
            }
        })
        .filter(|n| allowed.map_or(true, |a| a.contains(&n.user_pos)))
        .collect();
    RsvpDag { nodes }
}

/// Mean pairwise propagation times and per-user influenceability, estimated
/// on a training split. Immutable after estimation.
#[derive(Debug, Clone)]
pub struct PropagationStats {
    tau: HashMap<(u32, u32), f64>,
    infl: Vec<f64>,
    /// (rank, rsvp time) of each user within each training event's order.
    rank_in_event: HashMap<(u32, u32), (u32, i64)>,
    pub fallback_tau: f64,
}

impl PropagationStats {
    /// Mean seconds for influence to travel v -> u; the 7-day fallback when
    /// the pair has no usable co-history.
    pub fn tau(&self, v_pos: usize, u_pos: usize) -> f64 {
        self.tau
            .get(&(v_pos as u32, u_pos as u32))
            .copied()
            .unwrap_or(self.fallback_tau)
    }

    /// Fraction of the user's attended training events where at least one
    /// co-group member RSVPed earlier.
    pub fn infl(&self, user_pos: usize) -> f64 {
        self.infl.get(user_pos).copied().unwrap_or(0.0)
    }

    fn rank_and_time(&self, event_pos: usize, user_pos: usize) -> Option<(u32, i64)> {
        self.rank_in_event
            .get(&(event_pos as u32, user_pos as u32))
            .copied()
    }

    pub fn n_pairs(&self) -> usize {
        self.tau.len()
    }
}

/// Serializable form of [`PropagationStats`] keyed by user id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationStatsArtifact {
    pub fallback_tau: f64,
    /// (v, u, tau) triples, sorted.
    pub taus: Vec<(String, String, f64)>,
    /// (user, infl) pairs, sorted; zero entries omitted.
    pub infl: Vec<(String, f64)>,
}

impl PropagationStats {
    pub fn to_artifact(&self, d: &Dataset) -> PropagationStatsArtifact {
        let mut taus: Vec<(String, String, f64)> = self
            .tau
            .iter()
            .map(|(&(v, u), &t)| {
                (
                    d.users()[v as usize].user_id.clone(),
                    d.users()[u as usize].user_id.clone(),
                    t,
                )
            })
            .collect();
        taus.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        let mut infl: Vec<(String, f64)> = self
            .infl
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, &v)| (d.users()[i].user_id.clone(), v))
            .collect();
        infl.sort_by(|a, b| a.0.cmp(&b.0));
        PropagationStatsArtifact {
            fallback_tau: self.fallback_tau,
            taus,
            infl,
        }
    }

    /// Rebinds an artifact to a dataset (user ids to positions) and rebuilds
    /// the per-event rank table from the training split.
    pub fn from_artifact(art: &PropagationStatsArtifact, train: &Dataset) -> PropagationStats {
        let mut tau = HashMap::with_capacity(art.taus.len());
        for (v, u, t) in &art.taus {
            if let (Some(vp), Some(up)) = (train.user_index(v), train.user_index(u)) {
                tau.insert((vp as u32, up as u32), *t);
            }
        }
        let mut infl = vec![0.0; train.users().len()];
        for (u, v) in &art.infl {
            if let Some(up) = train.user_index(u) {
                infl[up] = *v;
            }
        }
        PropagationStats {
            tau,
            infl,
            rank_in_event: build_rank_table(train),
            fallback_tau: art.fallback_tau,
        }
    }
}

fn build_rank_table(train: &Dataset) -> HashMap<(u32, u32), (u32, i64)> {
    let mut rank_in_event = HashMap::new();
    for ev in 0..train.events().len() {
        for (rank, &ri) in train.event_rsvps(ev).iter().enumerate() {
            let r = &train.rsvps()[ri];
            let up = train.user_index(&r.user_id).unwrap();
            rank_in_event.insert((ev as u32, up as u32), (rank as u32, r.rsvp_time));
        }
    }
    rank_in_event
}

/// Estimates tau and influenceability over all ordered co-attendance pairs
/// of the training split.
pub fn estimate_propagation_stats(train: &Dataset) -> PropagationStats {
    let user_groups: Vec<HashSet<usize>> = train
        .users()
        .iter()
        .map(|u| {
            u.joined_groups
                .iter()
                .filter_map(|g| train.group_index(g))
                .collect()
        })
        .collect();

    // per-event work in parallel, merged in event order for determinism
    let per_event: Vec<(Vec<((u32, u32), (f64, u32))>, Vec<(usize, bool)>)> = (0..train
        .events()
        .len())
        .into_par_iter()
        .map(|ev| {
            let nodes: Vec<(usize, i64)> = train
                .event_rsvps(ev)
                .iter()
                .map(|&ri| {
                    let r = &train.rsvps()[ri];
                    (train.user_index(&r.user_id).unwrap(), r.rsvp_time)
                })
                .collect();
            let mut pair_terms = Vec::with_capacity(nodes.len() * (nodes.len().saturating_sub(1)) / 2);
            let mut influenced = Vec::with_capacity(nodes.len());
            for (j, &(u, tu)) in nodes.iter().enumerate() {
                let mut was_influenced = false;
                for &(v, tv) in &nodes[..j] {
                    pair_terms.push(((v as u32, u as u32), ((tu - tv) as f64, 1)));
                    if !was_influenced && !user_groups[v].is_disjoint(&user_groups[u]) {
                        was_influenced = true;
                    }
                }
                influenced.push((u, was_influenced));
            }
            (pair_terms, influenced)
        })
        .collect();

    let mut sums: HashMap<(u32, u32), (f64, u32)> = HashMap::new();
    let mut attended = vec![0u32; train.users().len()];
    let mut influenced_count = vec![0u32; train.users().len()];
    for (pair_terms, influenced) in per_event {
        for (key, (dt, c)) in pair_terms {
            let entry = sums.entry(key).or_insert((0.0, 0));
            entry.0 += dt;
            entry.1 += c;
        }
        for (u, was) in influenced {
            attended[u] += 1;
            if was {
                influenced_count[u] += 1;
            }
        }
    }

    let tau: HashMap<(u32, u32), f64> = sums
        .into_iter()
        .map(|(k, (sum, cnt))| {
            let mean = sum / cnt as f64;
            let t = if mean > 0.0 { mean } else { DEFAULT_TAU_FALLBACK };
            (k, t)
        })
        .collect();
    let infl: Vec<f64> = attended
        .iter()
        .zip(&influenced_count)
        .map(|(&a, &i)| if a == 0 { 0.0 } else { i as f64 / a as f64 })
        .collect();

    PropagationStats {
        tau,
        infl,
        rank_in_event: build_rank_table(train),
        fallback_tau: DEFAULT_TAU_FALLBACK,
    }
}

/// Same-group and cross-group components of the direct credit
/// `w(v, u) = lambda_same * a + lambda_cross * b` for an event organized by
/// `event_group_pos`, summed over the pair's training co-history.
pub fn credit_coefficients(
    v_pos: usize,
    u_pos: usize,
    event_group_pos: usize,
    train: &Dataset,
    stats: &PropagationStats,
) -> (f64, f64) {
    let infl_u = stats.infl(u_pos);
    if infl_u == 0.0 {
        return (0.0, 0.0);
    }
    let mut a = 0.0;
    let mut b = 0.0;
    let (av, au) = (train.user_events(v_pos), train.user_events(u_pos));
    let (mut i, mut j) = (0, 0);
    while i < av.len() && j < au.len() {
        match av[i].cmp(&au[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let ev = av[i];
                i += 1;
                j += 1;
                let (rank_v, tv) = stats.rank_and_time(ev, v_pos).unwrap();
                let (rank_u, tu) = stats.rank_and_time(ev, u_pos).unwrap();
                if rank_v >= rank_u {
                    continue;
                }
                let tau = stats.tau(v_pos, u_pos);
                let term = infl_u / rank_u as f64 * influence_decay((tu - tv) as f64, tau);
                let same = train.group_index(&train.events()[ev].group_id).unwrap()
                    == event_group_pos;
                if same {
                    a += term;
                } else {
                    b += term;
                }
            }
        }
    }
    (a, b)
}

/// Direct influence credit of `v` on `u` for an event of the given group.
pub fn direct_credit(
    v_pos: usize,
    u_pos: usize,
    event_group_pos: usize,
    train: &Dataset,
    stats: &PropagationStats,
    params: &InfluenceParams,
) -> f64 {
    let (a, b) = credit_coefficients(v_pos, u_pos, event_group_pos, train, stats);
    params.lambda_same * a + params.lambda_cross * b
}

/// Dense upper-triangular edge credits for one DAG.
#[derive(Debug, Clone)]
pub struct DagCredits {
    k: usize,
    w: Vec<f64>,
}

impl DagCredits {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.k + j]
    }
}

/// Total influence of the node at `v_rank` on every node: base case
/// `omega[v] = 1`, then one topological pass accumulating path products.
pub fn omega_from(v_rank: usize, dag: &RsvpDag, credits: &DagCredits) -> Vec<f64> {
    let k = dag.len();
    let mut omega = vec![0.0; k];
    if v_rank >= k {
        return omega;
    }
    omega[v_rank] = 1.0;
    for j in v_rank + 1..k {
        let mut acc = 0.0;
        for i in v_rank..j {
            if omega[i] != 0.0 {
                acc += omega[i] * credits.get(i, j);
            }
        }
        omega[j] = acc;
    }
    omega
}

/// Omega for a single (v, u) pair; zero when u is not after v in the order.
pub fn total_influence(v_rank: usize, u_rank: usize, dag: &RsvpDag, credits: &DagCredits) -> f64 {
    if u_rank <= v_rank {
        return 0.0;
    }
    omega_from(v_rank, dag, credits)[u_rank]
}

/// Sum of omega from `v` to every other dag node belonging to the group.
pub fn group_influence_score(
    v_rank: usize,
    is_member: &[bool],
    dag: &RsvpDag,
    credits: &DagCredits,
) -> f64 {
    let omega = omega_from(v_rank, dag, credits);
    omega
        .iter()
        .enumerate()
        .filter(|&(u, _)| u != v_rank && is_member[u])
        .map(|(_, &w)| w)
        .sum()
}

/// Seed-restricted influence structure for one event, with credits kept as
/// (same, cross) coefficient pairs so lambda sweeps stay cheap.
#[derive(Debug, Clone)]
pub struct EventInfluence {
    pub dag: RsvpDag,
    a: Vec<f64>,
    b: Vec<f64>,
    is_member: Vec<bool>,
}

impl EventInfluence {
    /// Total seed influence at the given lambda weights.
    pub fn influence(&self, lambda_same: f64, lambda_cross: f64) -> f64 {
        let k = self.dag.len();
        if k < 2 {
            return 0.0;
        }
        let mut w = vec![0.0; k * k];
        for i in 0..k {
            for j in i + 1..k {
                w[i * k + j] = lambda_same * self.a[i * k + j] + lambda_cross * self.b[i * k + j];
            }
        }
        let credits = DagCredits { k, w };
        (0..k)
            .map(|v| group_influence_score(v, &self.is_member, &self.dag, &credits))
            .sum()
    }

    pub fn n_seeds(&self) -> usize {
        self.dag.len()
    }
}

/// Builds the seed DAG and credit coefficients from raw event parts; used
/// both for split events and for what-if stubs that carry no RSVPs.
///
/// Seeds are the organizer plus users whose RSVPs fall within
/// `seed_horizon_secs` after the announcement; with a zero horizon only the
/// organizer remains. When `restrict_to_training_users` is set, RSVP seeds
/// are limited to users with at least one training interaction.
pub fn build_event_influence_from_parts(
    group_pos: usize,
    announce_time: i64,
    rsvp_nodes: &[(usize, i64)],
    train: &Dataset,
    stats: &PropagationStats,
    seed_horizon_secs: i64,
    restrict_to_training_users: bool,
) -> EventInfluence {
    let group = &train.groups()[group_pos];
    let organizer_pos = train.user_index(&group.organizer_id).expect("organizer resolves");

    let mut nodes: Vec<DagNode> = rsvp_nodes
        .iter()
        .map(|&(user_pos, time)| DagNode { user_pos, time })
        .filter(|n| n.time - announce_time < seed_horizon_secs)
        .filter(|n| !restrict_to_training_users || !train.user_events(n.user_pos).is_empty())
        .collect();
    if !nodes.iter().any(|n| n.user_pos == organizer_pos) {
        nodes.push(DagNode {
            user_pos: organizer_pos,
            time: announce_time,
        });
    }
    nodes.sort_by(|x, y| {
        (x.time, &train.users()[x.user_pos].user_id)
            .cmp(&(y.time, &train.users()[y.user_pos].user_id))
    });
    let dag = RsvpDag { nodes };

    let k = dag.len();
    let mut a = vec![0.0; k * k];
    let mut b = vec![0.0; k * k];
    for i in 0..k {
        for j in i + 1..k {
            let (ai, bi) = credit_coefficients(
                dag.nodes[i].user_pos,
                dag.nodes[j].user_pos,
                group_pos,
                train,
                stats,
            );
            a[i * k + j] = ai;
            b[i * k + j] = bi;
        }
    }
    let is_member: Vec<bool> = dag
        .nodes
        .iter()
        .map(|n| group.member_ids.contains(&train.users()[n.user_pos].user_id))
        .collect();
    EventInfluence { dag, a, b, is_member }
}

/// [`build_event_influence_from_parts`] for an event living in a split.
pub fn build_event_influence(
    event_ds: &Dataset,
    event_pos: usize,
    train: &Dataset,
    stats: &PropagationStats,
    seed_horizon_secs: i64,
    restrict_to_training_users: bool,
) -> EventInfluence {
    let ev = &event_ds.events()[event_pos];
    let group_pos = train.group_index(&ev.group_id).expect("group resolves");
    let rsvp_nodes: Vec<(usize, i64)> = event_ds
        .event_rsvps(event_pos)
        .iter()
        .map(|&ri| {
            let r = &event_ds.rsvps()[ri];
            (event_ds.user_index(&r.user_id).unwrap(), r.rsvp_time)
        })
        .collect();
    build_event_influence_from_parts(
        group_pos,
        ev.announce_time,
        &rsvp_nodes,
        train,
        stats,
        seed_horizon_secs,
        restrict_to_training_users,
    )
}

/// The event influence feature: summed group influence of every seed.
pub fn event_influence_feature(
    event_ds: &Dataset,
    event_pos: usize,
    train: &Dataset,
    stats: &PropagationStats,
    params: &InfluenceParams,
    restrict_to_training_users: bool,
) -> f64 {
    build_event_influence(
        event_ds,
        event_pos,
        train,
        stats,
        params.seed_horizon_secs,
        restrict_to_training_users,
    )
    .influence(params.lambda_same, params.lambda_cross)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::tests::{event, group, rsvp, user};
    use crate::data::{Dataset, Event};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn two_user_history(gap: i64, n_events: usize) -> Dataset {
        let users = vec![
            user("uv", 0.0, 0.0, &["g1"]),
            user("uu", 0.0, 0.0, &["g1"]),
        ];
        let groups = vec![group("g1", "tech", "uv", &["uv", "uu"])];
        let mut events = Vec::new();
        let mut rsvps = Vec::new();
        for i in 0..n_events {
            let eid = format!("e{i}");
            let start = 10_000_000 + i as i64 * 1_000_000;
            events.push(event(&eid, "g1", start));
            rsvps.push(rsvp(&eid, "uv", start - 500_000));
            rsvps.push(rsvp(&eid, "uu", start - 500_000 + gap));
        }
        Dataset::build(users, groups, events, rsvps).unwrap()
    }

    #[test]
    fn dag_shapes() {
        let d = two_user_history(1000, 1);
        let dag = build_rsvp_dag(&d, 0, None);
        assert_eq!(dag.len(), 2);
        assert_eq!(dag.predecessors(0), 0);
        assert_eq!(dag.predecessors(1), 1);

        // single rsvp: one node, no edges
        let users = vec![user("u1", 0.0, 0.0, &["g1"])];
        let groups = vec![group("g1", "tech", "u1", &["u1"])];
        let events = vec![event("e1", "g1", 1_000_000)];
        let rsvps = vec![rsvp("e1", "u1", 900_000)];
        let d = Dataset::build(users, groups, events, rsvps).unwrap();
        let dag = build_rsvp_dag(&d, 0, None);
        assert_eq!(dag.len(), 1);
    }

    #[test]
    fn dag_tie_break_on_user_id() {
        let users = vec![
            user("ub", 0.0, 0.0, &["g1"]),
            user("ua", 0.0, 0.0, &["g1"]),
        ];
        let groups = vec![group("g1", "tech", "ua", &["ua", "ub"])];
        let events = vec![event("e1", "g1", 1_000_000)];
        let rsvps = vec![rsvp("e1", "ub", 900_000), rsvp("e1", "ua", 900_000)];
        let d = Dataset::build(users, groups, events, rsvps).unwrap();
        let dag = build_rsvp_dag(&d, 0, None);
        assert_eq!(d.users()[dag.nodes[0].user_pos].user_id, "ua");
        assert_eq!(d.users()[dag.nodes[1].user_pos].user_id, "ub");
    }

    #[test]
    fn tau_constant_gap() {
        let d = two_user_history(172_800, 3);
        let stats = estimate_propagation_stats(&d);
        let (v, u) = (d.user_index("uv").unwrap(), d.user_index("uu").unwrap());
        assert_eq!(stats.tau(v, u), 172_800.0);
        // unknown pair falls back to 7 days
        assert_eq!(stats.tau(u, v), DEFAULT_TAU_FALLBACK);
    }

    #[test]
    fn infl_first_rsvper_is_zero() {
        let d = two_user_history(1000, 3);
        let stats = estimate_propagation_stats(&d);
        let v = d.user_index("uv").unwrap();
        let u = d.user_index("uu").unwrap();
        assert_eq!(stats.infl(v), 0.0);
        assert_eq!(stats.infl(u), 1.0);
    }

    #[test]
    fn stats_match_brute_force() {
        let mut rng = StdRng::seed_from_u64(13);
        let user_names: Vec<String> = (0..6).map(|i| format!("u{i}")).collect();
        let users: Vec<_> = user_names
            .iter()
            .map(|n| user(n, 0.0, 0.0, &["g1"]))
            .collect();
        let member_refs: Vec<&str> = user_names.iter().map(|s| s.as_str()).collect();
        let groups = vec![group("g1", "tech", "u0", &member_refs)];
        let mut events = Vec::new();
        let mut rsvps = Vec::new();
        for i in 0..8 {
            let eid = format!("e{i}");
            let start = 10_000_000 + i as i64 * 1_000_000;
            events.push(event(&eid, "g1", start));
            for (k, name) in user_names.iter().enumerate() {
                if rng.gen_bool(0.6) {
                    rsvps.push(rsvp(&eid, name, start - 900_000 + k as i64 * rng.gen_range(1..5000)));
                }
            }
        }
        let d = Dataset::build(users, groups, events, rsvps).unwrap();
        let stats = estimate_propagation_stats(&d);

        // brute force over raw rsvp lists
        for v in 0..6 {
            for u in 0..6 {
                if v == u {
                    continue;
                }
                let mut gaps = Vec::new();
                for ev in 0..d.events().len() {
                    let order: Vec<(usize, i64)> = d
                        .event_rsvps(ev)
                        .iter()
                        .map(|&ri| {
                            let r = &d.rsvps()[ri];
                            (d.user_index(&r.user_id).unwrap(), r.rsvp_time)
                        })
                        .collect();
                    let pv = order.iter().position(|&(p, _)| p == v);
                    let pu = order.iter().position(|&(p, _)| p == u);
                    if let (Some(iv), Some(iu)) = (pv, pu) {
                        if iv < iu {
                            gaps.push((order[iu].1 - order[iv].1) as f64);
                        }
                    }
                }
                if gaps.is_empty() {
                    assert_eq!(stats.tau(v, u), DEFAULT_TAU_FALLBACK);
                } else {
                    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
                    let want = if mean > 0.0 { mean } else { DEFAULT_TAU_FALLBACK };
                    assert!((stats.tau(v, u) - want).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn credit_analytic_one_event() {
        let tau = 172_800;
        let d = two_user_history(tau, 1);
        let stats = estimate_propagation_stats(&d);
        let (v, u) = (d.user_index("uv").unwrap(), d.user_index("uu").unwrap());
        let params = InfluenceParams {
            lambda_same: 2.0,
            lambda_cross: 0.5,
            ..Default::default()
        };
        // one shared same-group event, gap == tau, |N(u)| = 1, infl(u) = 1
        let w_same = direct_credit(v, u, 0, &d, &stats, &params);
        assert!((w_same - 2.0 * (-1.0f64).exp()).abs() < 1e-12, "got {w_same}");
        assert!((w_same / 2.0 - 0.36788).abs() < 1e-5);
        // no shared history in the other direction
        assert_eq!(direct_credit(u, v, 0, &d, &stats, &params), 0.0);
    }

    #[test]
    fn credit_group_agnostic_when_lambdas_tied() {
        // co-history in g1; score against g1 (same) and g2 (cross)
        let users = vec![
            user("uv", 0.0, 0.0, &["g1", "g2"]),
            user("uu", 0.0, 0.0, &["g1", "g2"]),
        ];
        let groups = vec![
            group("g1", "tech", "uv", &["uv", "uu"]),
            group("g2", "arts", "uv", &["uv", "uu"]),
        ];
        let events = vec![event("e1", "g1", 10_000_000)];
        let rsvps = vec![rsvp("e1", "uv", 9_000_000), rsvp("e1", "uu", 9_100_000)];
        let d = Dataset::build(users, groups, events, rsvps).unwrap();
        let stats = estimate_propagation_stats(&d);
        let (v, u) = (d.user_index("uv").unwrap(), d.user_index("uu").unwrap());
        let tied = InfluenceParams {
            lambda_same: 1.3,
            lambda_cross: 1.3,
            ..Default::default()
        };
        let g1 = d.group_index("g1").unwrap();
        let g2 = d.group_index("g2").unwrap();
        assert_eq!(
            direct_credit(v, u, g1, &d, &stats, &tied),
            direct_credit(v, u, g2, &d, &stats, &tied)
        );
        // scaling both lambdas scales the credit linearly
        let doubled = InfluenceParams {
            lambda_same: 2.6,
            lambda_cross: 2.6,
            ..Default::default()
        };
        assert!(
            (direct_credit(v, u, g1, &d, &stats, &doubled)
                - 2.0 * direct_credit(v, u, g1, &d, &stats, &tied))
            .abs()
                < 1e-15
        );
    }

    fn dag_of(k: usize) -> RsvpDag {
        RsvpDag {
            nodes: (0..k)
                .map(|i| DagNode {
                    user_pos: i,
                    time: i as i64,
                })
                .collect(),
        }
    }

    fn credits_from(w: impl Fn(usize, usize) -> f64, k: usize) -> DagCredits {
        let mut m = vec![0.0; k * k];
        for i in 0..k {
            for j in i + 1..k {
                m[i * k + j] = w(i, j);
            }
        }
        DagCredits { k, w: m }
    }

    /// Exhaustive path-product oracle for omega.
    pub(crate) fn omega_paths(v: usize, u: usize, credits: &DagCredits) -> f64 {
        fn rec(at: usize, u: usize, credits: &DagCredits, acc: f64) -> f64 {
            if at == u {
                return acc;
            }
            let mut total = 0.0;
            for next in at + 1..=u {
                let w = credits.get(at, next);
                if w != 0.0 {
                    total += rec(next, u, credits, acc * w);
                }
            }
            total
        }
        if u <= v {
            return 0.0;
        }
        rec(v, u, credits, 1.0)
    }

    #[test]
    fn omega_direct_and_chain() {
        let dag = dag_of(3);
        // chain v=0 -> z=1 -> u=2 plus direct 0 -> 2
        let credits = credits_from(
            |i, j| match (i, j) {
                (0, 1) => 0.5,
                (1, 2) => 0.4,
                (0, 2) => 0.3,
                _ => 0.0,
            },
            3,
        );
        assert_eq!(total_influence(0, 1, &dag, &credits), 0.5);
        let w = total_influence(0, 2, &dag, &credits);
        assert!((w - (0.3 + 0.5 * 0.4)).abs() < 1e-15);
        // unreachable: backwards
        assert_eq!(total_influence(2, 0, &dag, &credits), 0.0);
    }

    #[test]
    fn omega_matches_path_enumeration() {
        let mut rng = StdRng::seed_from_u64(41);
        for _ in 0..50 {
            let k = rng.gen_range(2..=10);
            let dag = dag_of(k);
            let dense: Vec<f64> = (0..k * k).map(|_| rng.gen_range(0.0..0.9)).collect();
            let credits = credits_from(
                |i, j| {
                    if rng_keep(i, j) {
                        dense[i * k + j]
                    } else {
                        0.0
                    }
                },
                k,
            );
            for v in 0..k {
                for u in 0..k {
                    let fast = total_influence(v, u, &dag, &credits);
                    let slow = omega_paths(v, u, &credits);
                    assert!(
                        (fast - slow).abs() < 1e-12,
                        "v={v} u={u} fast={fast} slow={slow}"
                    );
                }
            }
        }
    }

    fn rng_keep(i: usize, j: usize) -> bool {
        // deterministic sparse-ish pattern
        (i * 7 + j * 13) % 3 != 0
    }

    #[test]
    fn group_score_fixtures() {
        let dag = dag_of(2);
        let credits = credits_from(|_, _| 0.4, 2);
        // both nodes members
        assert_eq!(group_influence_score(0, &[true, true], &dag, &credits), 0.4);
        // last node has no outgoing edges
        assert_eq!(group_influence_score(1, &[true, true], &dag, &credits), 0.0);
        // non-member target contributes nothing
        assert_eq!(group_influence_score(0, &[true, false], &dag, &credits), 0.0);
    }

    #[test]
    fn seed_horizon_zero_is_organizer_only() {
        let d = two_user_history(1000, 2);
        let stats = estimate_propagation_stats(&d);
        let ei = build_event_influence(&d, 1, &d, &stats, 0, true);
        assert_eq!(ei.n_seeds(), 1);
        assert_eq!(ei.influence(1.0, 1.0), 0.0);
    }

    #[test]
    fn organizer_without_history_scores_zero() {
        let users = vec![
            user("org", 0.0, 0.0, &["g1"]),
            user("u1", 0.0, 0.0, &["g1"]),
        ];
        let groups = vec![group("g1", "tech", "org", &["org", "u1"])];
        let mut e1: Event = event("e1", "g1", 10_000_000);
        e1.announce_time = 9_000_000;
        let rsvps = vec![rsvp("e1", "u1", 9_000_100)];
        let d = Dataset::build(users, groups, vec![e1], rsvps).unwrap();
        // train on an empty history
        let empty = Dataset::build(
            d.users().to_vec(),
            d.groups().to_vec(),
            vec![],
            vec![],
        )
        .unwrap();
        let stats = estimate_propagation_stats(&empty);
        let score = event_influence_feature(
            &d,
            0,
            &empty,
            &stats,
            &InfluenceParams::default(),
            false,
        );
        assert_eq!(score, 0.0);
    }
}

//! The constructive pipeline: connector selection between consecutive family
//! rays, the auxiliary graph with its three edge classes, routing of a
//! hexagonal pattern through dedicated connector blobs, lifting the routed
//! paths back into the graph under the clearance filters, and measuring the
//! four structural clauses of the resulting subdivision.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::RayFamily;
use crate::graph::GraphHandle;
use crate::par::{indexed_map, ExecMode};

/// A family materialized against a window, with positional lookup per ray.
pub struct FamilyWin {
    pub rays: Vec<RayWin>,
    pub schedule: Vec<u32>,
}

pub struct RayWin {
    pub idxs: Vec<u32>,
    pub pos: HashMap<u32, u32>,
}

impl FamilyWin {
    pub fn materialize(g: &GraphHandle, fam: &RayFamily, schedule: &[u32]) -> Result<FamilyWin> {
        if schedule.len() != fam.rays.len() {
            return Err(Error::PremiseViolated(format!(
                "schedule length {} != ray count {}",
                schedule.len(),
                fam.rays.len()
            )));
        }
        crate::family::check_monotone(schedule)?;
        let rays = fam
            .rays
            .iter()
            .map(|r| {
                let idxs = r.materialize(g)?;
                let pos = idxs.iter().enumerate().map(|(p, &i)| (i, p as u32)).collect();
                Ok(RayWin { idxs, pos })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FamilyWin { rays, schedule: schedule.to_vec() })
    }

    fn k(&self, ray: usize) -> u32 {
        self.schedule[ray]
    }
}

/// Required center-to-center spacing between connector columns. The first
/// term is the literal clearance (1); the second is the spacing floor the
/// final contraction needs along the shared rays, which dominates for small K.
pub fn required_separation(k: u32) -> u32 {
    (4 * k).saturating_sub(3).max(3 * k + 1)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Demand {
    /// connects rays (pair, pair + 1)
    pub pair: u32,
}

#[derive(Debug, Clone)]
pub struct Connector {
    pub index: usize,
    pub pair: u32,
    /// Path from ray `pair` to ray `pair+1`, as window indices.
    pub path: Vec<u32>,
    pub low_pos: u32,
    pub high_pos: u32,
    /// Clearance radius this connector was chosen under.
    pub clearance: u32,
}

/// Sequentially choose one connector per demand by shortest-path search in
/// the window minus the fattened balls of all previous connectors and minus
/// the guarded ray prefixes, so footprints advance monotonically along every
/// ray.
pub fn choose_connectors(
    g: &GraphHandle,
    fam: &FamilyWin,
    demands: &[Demand],
) -> Result<Vec<Connector>> {
    let n = g.vertex_count();
    let mut connectors: Vec<Connector> = Vec::new();
    // guarded prefix end per ray (positions <= guard_end are off limits)
    let mut guard_end: Vec<Option<u32>> = vec![None; fam.rays.len()];
    let mut guard_mask = vec![false; n];

    let mut prior_union: Vec<u32> = Vec::new();
    for (di, d) in demands.iter().enumerate() {
        let pair = d.pair as usize;
        if pair + 1 >= fam.rays.len() {
            return Err(Error::PremiseViolated(format!(
                "demand {di} references ray pair ({},{}) outside the family",
                pair,
                pair + 1
            )));
        }
        let khat = fam.k(pair + 1);
        let sep = required_separation(khat);
        let clearance = sep.saturating_sub(1);

        // forbidden: fattened balls around all previous connectors, in one
        // bounded sweep from their union
        let mut forbidden = vec![false; n];
        if !prior_union.is_empty() {
            for (v, _) in g.bounded_ball_idx(&prior_union, clearance) {
                forbidden[v as usize] = true;
            }
        }
        for (v, f) in forbidden.iter_mut().zip(guard_mask.iter()) {
            *v = *v || *f;
        }

        let low = &fam.rays[pair];
        let high = &fam.rays[pair + 1];
        let sources: Vec<u32> = low
            .idxs
            .iter()
            .copied()
            .filter(|&v| !forbidden[v as usize])
            .collect();
        let targets: Vec<u32> = high
            .idxs
            .iter()
            .copied()
            .filter(|&v| !forbidden[v as usize])
            .collect();
        if sources.is_empty() || targets.is_empty() {
            return Err(Error::EnlargeWindow(format!(
                "demand {di} (pair {pair}): ray prefixes fully guarded"
            )));
        }
        // prefer the earliest admissible attachment on the low ray
        let path = g
            .shortest_path_avoiding(&sources, &targets, &forbidden, |v| {
                low.pos.get(&v).copied().unwrap_or(u32::MAX) as u64
            })
            .ok_or_else(|| {
                Error::EnlargeWindow(format!(
                    "demand {di} (pair {pair}): no connector path in the depleted window"
                ))
            })?;
        let low_pos = low.pos[&path[0]];
        let high_pos = high.pos[path.last().unwrap()];
        let conn = Connector { index: di, pair: d.pair, path, low_pos, high_pos, clearance };

        // advance the guards: every ray position within K_k of the new
        // connector (or touching it, for K_k = 0) closes the prefix up to it
        let maxk = fam.schedule.iter().copied().max().unwrap_or(0);
        let near = g.bounded_ball_map(&conn.path, maxk.max(1) - 0);
        for (ridx, ray) in fam.rays.iter().enumerate() {
            let reach = fam.k(ridx).max(1) - 1; // within K_k - 1, i.e. < K_k
            let mut new_end: Option<u32> = None;
            for (&v, &dd) in near.iter() {
                if dd <= reach.max(0) || (fam.k(ridx) == 0 && dd == 0) {
                    if let Some(&p) = ray.pos.get(&v) {
                        new_end = Some(new_end.map_or(p, |e| e.max(p)));
                    }
                }
            }
            // for K_k = 0 rays, still close the prefix at the touch point
            if fam.k(ridx) == 0 {
                for v in &conn.path {
                    if let Some(&p) = ray.pos.get(v) {
                        new_end = Some(new_end.map_or(p, |e| e.max(p)));
                    }
                }
            }
            if let Some(e) = new_end {
                let old = guard_end[ridx];
                let e = old.map_or(e, |o| o.max(e));
                guard_end[ridx] = Some(e);
                // extend the guard mask over the newly closed prefix
                let from = old.map_or(0, |o| o + 1).min(e);
                let seg: Vec<u32> = ray.idxs[from as usize..=e as usize].to_vec();
                let radius = fam.k(ridx).max(1) - 1;
                for (v, _) in g.bounded_ball_idx(&seg, radius) {
                    guard_mask[v as usize] = true;
                }
                for p in 0..=e {
                    guard_mask[ray.idxs[p as usize] as usize] = true;
                }
            }
        }
        // recorded clearance: the new connector is `clearance`-far from all
        // previous ones (one bounded sweep; the search region excluded them)
        if clearance > 0 && !prior_union.is_empty() {
            let prior_set: std::collections::HashSet<u32> = prior_union.iter().copied().collect();
            for (v, _) in g.bounded_ball_idx(&conn.path, clearance) {
                if prior_set.contains(&v) {
                    return Err(Error::PipelineStage {
                        stage: "choose_connectors",
                        message: format!(
                            "connector {di} comes within {clearance} of an earlier one"
                        ),
                        hint: "enlarge window".into(),
                    });
                }
            }
        }
        prior_union.extend_from_slice(&conn.path);
        connectors.push(conn);
    }
    Ok(connectors)
}

/// One auxiliary-graph blob: the trimmed connector interior plus its class-2
/// and class-3 attachments to the family rays.
#[derive(Debug, Clone)]
pub struct Blob {
    pub connector: usize,
    pub pair: u32,
    /// P'_i: connector vertices outside every fattened ray ball.
    pub p_prime: Vec<u32>,
    /// Rays within distance < K_n of the connector (the index set I).
    pub near_rays: Vec<u32>,
    /// Class-2 attachments per ray: (ray vertex, p' vertex) at distance exactly K_k.
    pub class2: BTreeMap<u32, Vec<(u32, u32)>>,
    /// Class-3 witness bridges per ray pair: (u on ray k, a, b, v on ray l)
    /// where (a,b) is a connector edge between the two fattened balls.
    pub class3: Vec<(u32, u32, u32, u32)>,
}

pub struct AuxGraph {
    pub blobs: Vec<Blob>,
}

/// The auxiliary graph: rays plus trimmed connectors, with class-2 edges
/// (ray vertex at distance exactly K_k from a trimmed vertex) and class-3
/// edges (ray-to-ray, witnessed by a connector edge between fattened balls).
pub fn build_auxiliary_graph(
    g: &GraphHandle,
    fam: &FamilyWin,
    connectors: &[Connector],
) -> Result<AuxGraph> {
    // distance-to-ray fields, one per ray (bounded by the max schedule value)
    let maxk = fam.schedule.iter().copied().max().unwrap_or(0);
    let ray_fields: Vec<HashMap<u32, u32>> = fam
        .rays
        .iter()
        .map(|r| g.bounded_ball_map(&r.idxs, maxk))
        .collect();

    let mut blobs = Vec::new();
    for c in connectors {
        let k_low = fam.k(c.pair as usize);
        let k_high = fam.k(c.pair as usize + 1);
        let in_ball = |v: u32| -> bool {
            ray_fields.iter().enumerate().any(|(ridx, f)| {
                let kk = fam.k(ridx);
                kk > 0 && f.get(&v).map(|&d| d < kk).unwrap_or(false)
            })
        };
        let p_prime: Vec<u32> = c.path.iter().copied().filter(|&v| !in_ball(v)).collect();
        let mut near_rays: Vec<u32> = Vec::new();
        for (ridx, f) in ray_fields.iter().enumerate() {
            let kk = fam.k(ridx);
            if kk > 0 && c.path.iter().any(|v| f.get(v).map(|&d| d < kk).unwrap_or(false)) {
                near_rays.push(ridx as u32);
            }
        }

        // class-2 attachments for the two endpoint rays
        let mut class2: BTreeMap<u32, Vec<(u32, u32)>> = BTreeMap::new();
        for &ridx in [c.pair, c.pair + 1].iter() {
            let kk = fam.k(ridx as usize);
            if kk == 0 {
                continue;
            }
            let ray = &fam.rays[ridx as usize];
            let mut opts = Vec::new();
            for &pp in &p_prime {
                for (v, dd) in g.bounded_ball_idx(&[pp], kk) {
                    if dd == kk && ray.pos.contains_key(&v) {
                        opts.push((v, pp));
                    }
                }
            }
            opts.sort_by_key(|&(v, pp)| (ray.pos[&v], pp));
            opts.dedup();
            if !opts.is_empty() {
                class2.insert(ridx, opts);
            }
        }

        // class-3 witnesses: connector edges between the two fattened balls
        let mut class3 = Vec::new();
        if k_low > 0 && k_high > 0 {
            let fl = &ray_fields[c.pair as usize];
            let fh = &ray_fields[c.pair as usize + 1];
            for w in c.path.windows(2) {
                let (a, b) = (w[0], w[1]);
                let a_low = fl.get(&a).map(|&d| d < k_low).unwrap_or(false);
                let b_high = fh.get(&b).map(|&d| d < k_high).unwrap_or(false);
                if a_low && b_high {
                    // endpoints on the rays at exact corridor distances
                    let us = exact_ring(g, a, k_low - 1, &fam.rays[c.pair as usize]);
                    let vs = exact_ring(g, b, k_high - 1, &fam.rays[c.pair as usize + 1]);
                    for &u in &us {
                        for &v in &vs {
                            class3.push((u, a, b, v));
                        }
                    }
                }
            }
        }
        blobs.push(Blob {
            connector: c.index,
            pair: c.pair,
            p_prime,
            near_rays,
            class2,
            class3,
        });
    }
    Ok(AuxGraph { blobs })
}

/// Ray vertices at distance exactly `r` from `v`.
fn exact_ring(g: &GraphHandle, v: u32, r: u32, ray: &RayWin) -> Vec<u32> {
    let mut out: Vec<u32> = g
        .bounded_ball_idx(&[v], r)
        .into_iter()
        .filter(|&(w, d)| d == r && ray.pos.contains_key(&w))
        .map(|(w, _)| w)
        .collect();
    out.sort_by_key(|w| ray.pos[w]);
    out
}

/// How a routed horizontal crossing will be expanded into a graph path.
#[derive(Debug, Clone)]
pub enum LiftPlan {
    /// Enter via a corridor (or directly for K=0), run along P', exit likewise.
    Through {
        low: AttachPlan,
        interior: Vec<u32>,
        high: AttachPlan,
    },
    /// The trimmed interior is empty: a single class-3 bridge carries the
    /// crossing; the lift contains the witnessing connector edge (a, b).
    Bridge { u: u32, a: u32, b: u32, v: u32 },
}

#[derive(Debug, Clone)]
pub enum AttachPlan {
    /// K = 0: the connector endpoint lies on the ray.
    Direct { u: u32 },
    /// Class-2: ray vertex u at distance exactly K from trimmed vertex pp.
    Corridor { u: u32, pp: u32 },
}

#[derive(Debug, Clone)]
pub struct RoutedRung {
    pub pair: u32,
    pub rung: u32,
    pub connector: usize,
    pub plan: LiftPlan,
    pub low_pos: u32,
    pub high_pos: u32,
}

#[derive(Debug, Clone)]
pub struct RoutedHex {
    pub rungs: Vec<RoutedRung>,
    pub rows: u32,
    pub cols: u32,
}

/// Hexagonal rung (pair p, index t) sits at hex height 2t + (p mod 2); the
/// construction consumes them in ascending staircase diagonals, descending
/// pair within a diagonal, which makes attachments alternate correctly along
/// every ray.
pub fn hex_edge_order(rows: u32, cols: u32) -> Vec<(u32, u32)> {
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for p in 0..cols.saturating_sub(1) {
        for t in 0..rows {
            edges.push((p, t));
        }
    }
    edges.sort_by_key(|&(p, t)| (t + p.div_ceil(2), std::cmp::Reverse(p)));
    edges
}

pub fn hex_height(pair: u32, t: u32) -> u32 {
    2 * t + pair % 2
}

/// Route one rung through one blob: pick the earliest admissible attachments
/// and connect them inside the trimmed connector.
fn route_one(
    g: &GraphHandle,
    fam: &FamilyWin,
    blob: &Blob,
    last_attach: &[Option<u32>],
) -> Option<(LiftPlan, u32, u32)> {
    let pair = blob.pair as usize;
    let admissible = |ray: usize, pos: u32| -> bool {
        last_attach[ray].map_or(true, |last| pos > last)
    };
    // class-3 bridge if the trimmed interior cannot carry the crossing
    let use_bridge = blob.p_prime.is_empty();
    if use_bridge {
        let low_ray = &fam.rays[pair];
        let high_ray = &fam.rays[pair + 1];
        let mut best: Option<(u32, u32, (u32, u32, u32, u32))> = None;
        for &(u, a, b, v) in &blob.class3 {
            let lp = low_ray.pos[&u];
            let hp = high_ray.pos[&v];
            if admissible(pair, lp) && admissible(pair + 1, hp) {
                let cand = (lp, hp, (u, a, b, v));
                if best.as_ref().map(|x| (cand.0, cand.1) < (x.0, x.1)).unwrap_or(true) {
                    best = Some(cand);
                }
            }
        }
        let (lp, hp, (u, a, b, v)) = best?;
        return Some((LiftPlan::Bridge { u, a, b, v }, lp, hp));
    }

    // attachment options per side
    let side = |ray: usize| -> Vec<(u32, AttachPlan)> {
        let kk = fam.k(ray);
        let rw = &fam.rays[ray];
        if kk == 0 {
            // the connector endpoint on the ray is itself a trimmed vertex
            blob.p_prime
                .iter()
                .filter_map(|&v| rw.pos.get(&v).map(|&p| (p, AttachPlan::Direct { u: v })))
                .collect()
        } else {
            blob.class2
                .get(&(ray as u32))
                .map(|opts| {
                    opts.iter()
                        .map(|&(u, pp)| (rw.pos[&u], AttachPlan::Corridor { u, pp }))
                        .collect()
                })
                .unwrap_or_default()
        }
    };
    let mut low_opts = side(pair);
    low_opts.retain(|(p, _)| admissible(pair, *p));
    low_opts.sort_by_key(|(p, _)| *p);
    let mut high_opts = side(pair + 1);
    high_opts.retain(|(p, _)| admissible(pair + 1, *p));
    high_opts.sort_by_key(|(p, _)| *p);

    let pset: BTreeSet<u32> = blob.p_prime.iter().copied().collect();
    for (lp, low) in &low_opts {
        let start = match low {
            AttachPlan::Direct { u } => *u,
            AttachPlan::Corridor { pp, .. } => *pp,
        };
        for (hp, high) in &high_opts {
            let goal = match high {
                AttachPlan::Direct { u } => *u,
                AttachPlan::Corridor { pp, .. } => *pp,
            };
            // path inside P' between the two anchor vertices
            let interior = path_within(g, &pset, start, goal)?;
            let _ = interior.len();
            return Some((
                LiftPlan::Through { low: low.clone(), interior, high: high.clone() },
                *lp,
                *hp,
            ));
        }
    }
    None
}

fn path_within(g: &GraphHandle, allowed: &BTreeSet<u32>, from: u32, to: u32) -> Option<Vec<u32>> {
    if from == to {
        return Some(vec![from]);
    }
    let mut prev: HashMap<u32, u32> = HashMap::new();
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(from);
    prev.insert(from, from);
    while let Some(v) = queue.pop_front() {
        for &w in g.adj_row(v) {
            if allowed.contains(&w) && !prev.contains_key(&w) {
                prev.insert(w, v);
                if w == to {
                    let mut path = vec![to];
                    let mut cur = to;
                    while cur != from {
                        cur = prev[&cur];
                        path.push(cur);
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(w);
            }
        }
    }
    None
}

/// Expand a routed crossing into a graph path. Corridors are forward-
/// lexicographic geodesics of the exact class length; the resulting walk is
/// pruned to a path keeping first occurrences.
fn lift_one(g: &GraphHandle, fam: &FamilyWin, pair: u32, plan: &LiftPlan) -> Result<Vec<u32>> {
    let k_low = fam.k(pair as usize);
    let k_high = fam.k(pair as usize + 1);
    let mut walk: Vec<u32> = Vec::new();
    match plan {
        LiftPlan::Bridge { u, a, b, v } => {
            let lo = g.lex_geodesic(*u, *a).ok_or_else(|| {
                Error::EnlargeWindow("bridge corridor unreachable".into())
            })?;
            if lo.len() as u32 != k_low.max(1) {
                return Err(Error::PipelineStage {
                    stage: "lift_horizontal_paths",
                    message: format!("bridge corridor length {} != {}", lo.len() - 1, k_low - 1),
                    hint: "enlarge window".into(),
                });
            }
            let hi = g.lex_geodesic(*b, *v).ok_or_else(|| {
                Error::EnlargeWindow("bridge corridor unreachable".into())
            })?;
            if hi.len() as u32 != k_high.max(1) {
                return Err(Error::PipelineStage {
                    stage: "lift_horizontal_paths",
                    message: format!("bridge corridor length {} != {}", hi.len() - 1, k_high - 1),
                    hint: "enlarge window".into(),
                });
            }
            walk.extend(lo);
            walk.extend(hi);
        }
        LiftPlan::Through { low, interior, high } => {
            match low {
                AttachPlan::Direct { .. } => {}
                AttachPlan::Corridor { u, pp } => {
                    let c = g.lex_geodesic(*u, *pp).ok_or_else(|| {
                        Error::EnlargeWindow("entry corridor unreachable".into())
                    })?;
                    if c.len() as u32 != k_low + 1 {
                        return Err(Error::PipelineStage {
                            stage: "lift_horizontal_paths",
                            message: format!("corridor length {} != K = {}", c.len() - 1, k_low),
                            hint: "enlarge window".into(),
                        });
                    }
                    walk.extend(&c[..c.len() - 1]);
                }
            }
            walk.extend(interior.iter().copied());
            match high {
                AttachPlan::Direct { .. } => {}
                AttachPlan::Corridor { u, pp } => {
                    let c = g.lex_geodesic(*pp, *u).ok_or_else(|| {
                        Error::EnlargeWindow("exit corridor unreachable".into())
                    })?;
                    if c.len() as u32 != k_high + 1 {
                        return Err(Error::PipelineStage {
                            stage: "lift_horizontal_paths",
                            message: format!("corridor length {} != K = {}", c.len() - 1, k_high),
                            hint: "enlarge window".into(),
                        });
                    }
                    walk.extend(&c[1..]);
                }
            }
        }
    }
    // prune the walk to a path, keeping the first occurrence of each vertex
    let mut path: Vec<u32> = Vec::with_capacity(walk.len());
    let mut seen: HashMap<u32, usize> = HashMap::new();
    for v in walk {
        if let Some(&at) = seen.get(&v) {
            for w in path.drain(at + 1..) {
                seen.remove(&w);
            }
        } else {
            seen.insert(v, path.len());
            path.push(v);
        }
    }
    Ok(path)
}

#[derive(Debug, Clone)]
pub struct HexPath {
    pub pair: u32,
    pub rung: u32,
    pub connector: usize,
    pub path: Vec<u32>,
    pub low_pos: u32,
    pub high_pos: u32,
}

#[derive(Debug, Clone)]
pub struct HexSubdivision {
    /// Indices into the family for the vertical rays (identity order).
    pub ray_ids: Vec<u32>,
    pub horizontals: Vec<HexPath>,
    pub rows: u32,
    pub cols: u32,
}

/// Per-ray footprint of a path: ray positions within distance < K_k.
fn footprints(
    g: &GraphHandle,
    fam: &FamilyWin,
    path: &[u32],
) -> Vec<Vec<u32>> {
    let maxk = fam.schedule.iter().copied().max().unwrap_or(0);
    let near = g.bounded_ball_map(path, maxk.max(1) - 1);
    fam.rays
        .iter()
        .enumerate()
        .map(|(ridx, ray)| {
            let kk = fam.k(ridx);
            if kk == 0 {
                return Vec::new();
            }
            let mut out: Vec<u32> = near
                .iter()
                .filter(|&(_, &d)| d < kk)
                .filter_map(|(&v, _)| ray.pos.get(&v).map(|_| v))
                .collect();
            out.sort_unstable();
            out
        })
        .collect()
}

struct Accepted {
    verts: BTreeSet<u32>,
    foot: Vec<Vec<u32>>,
}

/// Which of the three acceptance conditions a candidate failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftCondition {
    ConnectorClearance, // (a)
    RayContact,         // (b)
    FootprintSpacing,   // (c)
}

fn check_lift_conditions(
    g: &GraphHandle,
    fam: &FamilyWin,
    connectors: &[Connector],
    kappa: u32,
    cand_path: &[u32],
    cand_foot: &[Vec<u32>],
    accepted: &[Accepted],
) -> std::result::Result<(), LiftCondition> {
    if accepted.is_empty() {
        return Ok(());
    }
    let cand_set: BTreeSet<u32> = cand_path.iter().copied().collect();
    // (a) connectors meeting the candidate stay 2*kappa-1 away from accepted
    if kappa >= 1 {
        for c in connectors {
            if !c.path.iter().any(|v| cand_set.contains(v)) {
                continue;
            }
            for (v, _) in g.bounded_ball_idx(&c.path, 2 * kappa - 2) {
                if accepted.iter().any(|e| e.verts.contains(&v)) {
                    return Err(LiftCondition::ConnectorClearance);
                }
            }
        }
        // (b) ray vertices on the candidate stay kappa away from accepted
        let on_rays: Vec<u32> = cand_path
            .iter()
            .copied()
            .filter(|v| fam.rays.iter().any(|r| r.pos.contains_key(v)))
            .collect();
        if !on_rays.is_empty() && kappa >= 1 {
            for (v, _) in g.bounded_ball_idx(&on_rays, kappa - 1) {
                if accepted.iter().any(|e| e.verts.contains(&v)) {
                    return Err(LiftCondition::RayContact);
                }
            }
        }
    }
    // (c) ray footprints of candidate and accepted stay 2*K_k - 1 apart
    for (ridx, foot) in cand_foot.iter().enumerate() {
        let kk = fam.k(ridx);
        if kk == 0 || foot.is_empty() {
            continue;
        }
        let reach = g.bounded_ball_map(foot, 2 * kk - 2);
        for e in accepted {
            if e.foot[ridx].iter().any(|v| reach.contains_key(v)) {
                return Err(LiftCondition::FootprintSpacing);
            }
        }
    }
    Ok(())
}

/// First-candidate routing of the whole hexagonal pattern (no lift filters).
pub fn find_hex_subdivision(
    g: &GraphHandle,
    fam: &FamilyWin,
    aux: &AuxGraph,
    rows: u32,
    cols: u32,
) -> Result<RoutedHex> {
    route_hex(g, fam, aux, rows, cols, 1).map(|(routed, _)| routed)
}

fn route_hex(
    g: &GraphHandle,
    fam: &FamilyWin,
    aux: &AuxGraph,
    rows: u32,
    cols: u32,
    spare: u32,
) -> Result<(RoutedHex, Vec<Vec<usize>>)> {
    if cols as usize > fam.rays.len() {
        return Err(Error::MoreConnectors(format!(
            "pattern needs {cols} rays, family has {}",
            fam.rays.len()
        )));
    }
    // dedicated candidate queues: blob list positions per hex edge
    let order = hex_edge_order(rows, cols);
    let mut queues: Vec<Vec<usize>> = Vec::new();
    let mut cursor = 0usize;
    for _ in &order {
        let mut q = Vec::new();
        for _ in 0..spare {
            if cursor >= aux.blobs.len() {
                return Err(Error::MoreConnectors(format!(
                    "need {} connectors for a {rows}x{cols} pattern (spare {spare}), have {}",
                    order.len() * spare as usize,
                    aux.blobs.len()
                )));
            }
            q.push(cursor);
            cursor += 1;
        }
        queues.push(q);
    }
    let mut last_attach: Vec<Option<u32>> = vec![None; fam.rays.len()];
    let mut rungs = Vec::new();
    for (ei, &(p, t)) in order.iter().enumerate() {
        let mut placed = false;
        for &bi in &queues[ei] {
            let blob = &aux.blobs[bi];
            debug_assert_eq!(blob.pair, p, "demand list out of sync");
            if let Some((plan, lp, hp)) = route_one(g, fam, blob, &last_attach) {
                last_attach[p as usize] = Some(lp);
                last_attach[p as usize + 1] = Some(hp);
                rungs.push(RoutedRung {
                    pair: p,
                    rung: t,
                    connector: blob.connector,
                    plan,
                    low_pos: lp,
                    high_pos: hp,
                });
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::EnlargeWindow(format!(
                "routing blocked in blob(s) for rung (pair {p}, index {t})"
            )));
        }
    }
    Ok((
        RoutedHex { rungs, rows, cols },
        queues,
    ))
}

/// Lift every routed crossing, filtering candidates by the three clearance
/// conditions against the already accepted horizontal paths.
pub fn lift_horizontal_paths(
    g: &GraphHandle,
    fam: &FamilyWin,
    connectors: &[Connector],
    routed: &RoutedHex,
) -> Result<HexSubdivision> {
    let mut accepted: Vec<Accepted> = Vec::new();
    let mut horizontals = Vec::new();
    for r in &routed.rungs {
        let kappa = fam.k(r.pair as usize);
        let path = lift_one(g, fam, r.pair, &r.plan)?;
        let foot = footprints(g, fam, &path);
        if let Err(cond) = check_lift_conditions(g, fam, connectors, kappa, &path, &foot, &accepted)
        {
            return Err(Error::PipelineStage {
                stage: "lift_horizontal_paths",
                message: format!(
                    "rung (pair {}, index {}) rejected by condition {:?}",
                    r.pair, r.rung, cond
                ),
                hint: "more connectors / enlarge window".into(),
            });
        }
        accepted.push(Accepted { verts: path.iter().copied().collect(), foot });
        horizontals.push(HexPath {
            pair: r.pair,
            rung: r.rung,
            connector: r.connector,
            path,
            low_pos: r.low_pos,
            high_pos: r.high_pos,
        });
    }
    Ok(HexSubdivision {
        ray_ids: (0..routed.cols).collect(),
        horizontals,
        rows: routed.rows,
        cols: routed.cols,
    })
}

/// Routing with retry: when a lift candidate fails a condition, fall back to
/// the next dedicated connector for that rung.
pub fn build_hex_subdivision(
    g: &GraphHandle,
    fam: &FamilyWin,
    aux: &AuxGraph,
    connectors: &[Connector],
    rows: u32,
    cols: u32,
    spare: u32,
) -> Result<HexSubdivision> {
    let order = hex_edge_order(rows, cols);
    let mut queues: Vec<Vec<usize>> = Vec::new();
    let mut cursor = 0usize;
    for _ in &order {
        let mut q = Vec::new();
        for _ in 0..spare {
            if cursor >= aux.blobs.len() {
                return Err(Error::MoreConnectors(format!(
                    "need {} connectors for a {rows}x{cols} pattern (spare {spare}), have {}",
                    order.len() * spare as usize,
                    aux.blobs.len()
                )));
            }
            q.push(cursor);
            cursor += 1;
        }
        queues.push(q);
    }
    let mut last_attach: Vec<Option<u32>> = vec![None; fam.rays.len()];
    let mut accepted: Vec<Accepted> = Vec::new();
    let mut horizontals = Vec::new();
    for (ei, &(p, t)) in order.iter().enumerate() {
        let kappa = fam.k(p as usize);
        let mut placed = false;
        let mut last_cond: Option<LiftCondition> = None;
        for &bi in &queues[ei] {
            let blob = &aux.blobs[bi];
            let Some((plan, lp, hp)) = route_one(g, fam, blob, &last_attach) else {
                continue;
            };
            let path = lift_one(g, fam, p, &plan)?;
            let foot = footprints(g, fam, &path);
            match check_lift_conditions(g, fam, connectors, kappa, &path, &foot, &accepted) {
                Ok(()) => {
                    last_attach[p as usize] = Some(lp);
                    last_attach[p as usize + 1] = Some(hp);
                    accepted.push(Accepted { verts: path.iter().copied().collect(), foot });
                    horizontals.push(HexPath {
                        pair: p,
                        rung: t,
                        connector: blob.connector,
                        path,
                        low_pos: lp,
                        high_pos: hp,
                    });
                    placed = true;
                    break;
                }
                Err(cond) => {
                    last_cond = Some(cond);
                }
            }
        }
        if !placed {
            return Err(Error::PipelineStage {
                stage: "find_hex_subdivision",
                message: match last_cond {
                    Some(c) => format!("all candidates for rung ({p},{t}) fail condition {c:?}"),
                    None => format!("routing blocked for rung ({p},{t})"),
                },
                hint: "more connectors / enlarge window".into(),
            });
        }
    }
    Ok(HexSubdivision { ray_ids: (0..cols).collect(), horizontals, rows, cols })
}

/// Measured margin of one clause instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClauseRow {
    pub clause: String,
    pub subject: String,
    pub required: u32,
    /// Proven lower bound on the measured distance (or measured value).
    pub measured: u32,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClauseReport {
    pub rows: Vec<ClauseRow>,
    pub pass: bool,
}

impl ClauseReport {
    pub fn failures(&self) -> Vec<&ClauseRow> {
        self.rows.iter().filter(|r| !r.pass).collect()
    }
}

/// Measure the four structural clauses of a hex subdivision: vertical rays
/// from the family in order; horizontal-to-nonincident-ray distances; entry
/// corridor shape; and pairwise horizontal distances under the min-schedule
/// rule.
pub fn assemble_hex_subdivision(
    g: &GraphHandle,
    fam: &FamilyWin,
    hex: &HexSubdivision,
) -> Result<ClauseReport> {
    let mut rows: Vec<ClauseRow> = Vec::new();

    // (i) verticals belong to the family, attachments strictly increase and
    // alternate sides along every ray
    for (ridx, _ray) in fam.rays.iter().enumerate().take(hex.cols as usize) {
        let mut incident: Vec<(&HexPath, bool)> = Vec::new(); // (path, attaches_low_side)
        for h in &hex.horizontals {
            if h.pair as usize == ridx {
                incident.push((h, true));
            } else if h.pair as usize + 1 == ridx {
                incident.push((h, false));
            }
        }
        incident.sort_by_key(|(h, _)| {
            if h.pair as usize == ridx {
                h.low_pos
            } else {
                h.high_pos
            }
        });
        let positions: Vec<u32> = incident
            .iter()
            .map(|(h, _)| if h.pair as usize == ridx { h.low_pos } else { h.high_pos })
            .collect();
        let strictly_increasing = positions.windows(2).all(|w| w[0] < w[1]);
        // heights must come out 0,1,2,... i.e. alternate sides per the pattern
        let heights: Vec<u32> = incident
            .iter()
            .map(|(h, _)| hex_height(h.pair, h.rung))
            .collect();
        let heights_ok = heights.windows(2).all(|w| w[0] < w[1]);
        rows.push(ClauseRow {
            clause: "i".into(),
            subject: format!("ray {ridx} attachment order"),
            required: 1,
            measured: u32::from(strictly_increasing && heights_ok),
            pass: strictly_increasing && heights_ok,
        });
    }

    // full BFS field per horizontal path, reused for (ii) and (iv)
    let fields: Vec<Vec<u32>> = indexed_map(hex.horizontals.len(), ExecMode::default_mode(), |i| {
        g.bfs_field(&hex.horizontals[i].path)
    });

    // (ii) horizontal paths vs non-incident rays
    for (hi, h) in hex.horizontals.iter().enumerate() {
        for (ridx, ray) in fam.rays.iter().enumerate().take(hex.cols as usize) {
            if ridx == h.pair as usize || ridx == h.pair as usize + 1 {
                continue;
            }
            let req = fam.k(ridx);
            let mut measured = u32::MAX;
            for &v in &ray.idxs {
                measured = measured.min(fields[hi][v as usize]);
            }
            rows.push(ClauseRow {
                clause: "ii".into(),
                subject: format!("rung ({},{}) vs ray {}", h.pair, h.rung, ridx),
                required: req,
                measured,
                pass: measured >= req,
            });
        }
    }

    // (iii) entry corridor: the path inside G[S_i, K_i - 1] is a terminal
    // subpath of length exactly K_i - 1
    for h in &hex.horizontals {
        for (ridx, from_low) in [(h.pair as usize, true), (h.pair as usize + 1, false)] {
            let kk = fam.k(ridx);
            let subject = format!(
                "rung ({},{}) corridor at ray {}",
                h.pair, h.rung, ridx
            );
            if kk == 0 {
                // G[S_i, -1] is empty; nothing to measure
                rows.push(ClauseRow { clause: "iii".into(), subject, required: 0, measured: 0, pass: true });
                continue;
            }
            let ball = g.bounded_ball_map(&fam.rays[ridx].idxs, kk - 1);
            let inside: Vec<bool> = h.path.iter().map(|v| ball.contains_key(v)).collect();
            let run = if from_low {
                inside.iter().take_while(|&&b| b).count()
            } else {
                inside.iter().rev().take_while(|&&b| b).count()
            };
            let total = inside.iter().filter(|&&b| b).count();
            let ok = run == total && run as u32 == kk; // K vertices = length K-1
            rows.push(ClauseRow {
                clause: "iii".into(),
                subject,
                required: kk - 1,
                measured: run.saturating_sub(1) as u32,
                pass: ok,
            });
        }
    }

    // (iv) pairwise horizontal distances, required K_n with n = min of the
    // two schedule entries (clamped into the schedule)
    for i in 0..hex.horizontals.len() {
        for j in i + 1..hex.horizontals.len() {
            let hi = &hex.horizontals[i];
            let hj = &hex.horizontals[j];
            let ki = fam.k(hi.pair as usize);
            let kj = fam.k(hj.pair as usize);
            let idx = (ki.min(kj) as usize).min(fam.schedule.len() - 1);
            let req = fam.schedule[idx];
            let mut measured = u32::MAX;
            for &v in &hj.path {
                measured = measured.min(fields[i][v as usize]);
            }
            rows.push(ClauseRow {
                clause: "iv".into(),
                subject: format!(
                    "rung ({},{}) vs rung ({},{})",
                    hi.pair, hi.rung, hj.pair, hj.rung
                ),
                required: req,
                measured,
                pass: measured >= req,
            });
        }
    }

    let pass = rows.iter().all(|r| r.pass);
    Ok(ClauseReport { rows, pass })
}


// ---------------------------------------------------------------------------
// End-to-end driver
// ---------------------------------------------------------------------------

use crate::cert::{
    Certificate, ConnectorFile, FamilyFile, GraphDescriptor, HexPathFile, Mode,
    VerificationClaims, SCHEMA_VERSION,
};
use crate::contract::{compute_staircase, contract_hex_subdivision, regrid_ultrafat};
use crate::generators::AutomorphismKind;
use crate::model::{fatness_from_matrix, graded_strip_check, ultrafat_table, validate_model};
use crate::ray::{fat_ray_certificate, geodesic_ray, invariant_double_ray};

#[derive(Debug, Clone)]
pub enum Source {
    /// User-supplied family; separations are re-measured, never trusted.
    Family(RayFamily),
    /// Generator-registered automorphism data, optionally a specific id.
    Auto { automorphism: Option<String> },
}

pub const DEFAULT_SPARE: u32 = 2;

fn stage<T>(r: Result<T>, name: &'static str, hint: &str) -> Result<T> {
    r.map_err(|e| match e {
        e @ Error::PipelineStage { .. } => e,
        e => e.in_stage(name, hint),
    })
}

/// Build the ray family for auto mode: the non-elliptic branch rolls an
/// invariant double ray and stacks annuli around it; the elliptic branch
/// pulls tails of a geodesic ray back through translations along it.
fn auto_family(
    g: &GraphHandle,
    auto_id: Option<&str>,
    count: u32,
    gap_plan: &[u32],
) -> Result<RayFamily> {
    let spec = g.spec().clone();
    let phi = match auto_id {
        Some(id) => spec.automorphism(id)?,
        None => spec
            .default_auto()
            .ok_or_else(|| Error::UnknownAutomorphism("no registered automorphism".into()))?,
    };
    match phi.kind {
        AutomorphismKind::NonElliptic => {
            let (dr, _) = invariant_double_ray(g, &phi)?;
            let fam = crate::family::annulus_ray_family(g, &dr, &phi, count, Some(gap_plan))?;
            Ok(fam.family)
        }
        _ => {
            // all registered automorphisms elliptic: translated geodesic tails
            let base = spec.default_basepoint();
            let ray = geodesic_ray(g, &base)?;
            let mut autos = Vec::new();
            let mut anchors = Vec::new();
            let mut prev = 0u32;
            for j in 1..count {
                let next = prev + 4 * j;
                if next as usize >= ray.prefix.len() {
                    return Err(Error::EnlargeWindow(format!(
                        "geodesic ray too short for anchor {next}"
                    )));
                }
                let phi_j = spec
                    .matching_automorphism(&ray.prefix[prev as usize], &ray.prefix[next as usize])
                    .ok_or_else(|| {
                        Error::PremiseViolated(format!(
                            "no automorphism maps ray position {prev} to {next}"
                        ))
                    })?;
                autos.push(phi_j);
                anchors.push(next);
                prev = next;
            }
            crate::family::translate_ray_family(g, &ray, &autos, &anchors)
        }
    }
}

/// Run the full construction and emit a self-contained certificate. The
/// embedded model is re-verified before emission; the caller can re-verify
/// it independently with [`crate::cert::check_certificate`].
pub fn pipeline_halfgrid(
    g: &GraphHandle,
    mode: Mode,
    rows: u32,
    cols: u32,
    source: Source,
    spare: u32,
    seed: u64,
) -> Result<Certificate> {
    if rows == 0 || cols < 2 {
        return Err(Error::PremiseViolated("target needs rows >= 1 and cols >= 2".into()));
    }
    let spare = spare.max(1);

    // schedule, ray count and hex dimensions per mode
    let (schedule, hex_rows, hex_cols) = match mode {
        Mode::Kfat { k } => {
            if k == 0 {
                return Err(Error::PremiseViolated("kfat mode needs K >= 1".into()));
            }
            (vec![k; cols as usize], rows, cols)
        }
        Mode::Ultrafat => {
            let staircase = compute_staircase(cols, rows);
            let c = staircase.max_col + 1;
            ((0..c).collect(), cols, c)
        }
    };
    crate::family::check_monotone(&schedule)?;

    // gap plan between consecutive annulus levels: K_{j-1} + K_j - 1
    let gap_plan: Vec<u32> = (0..hex_cols)
        .map(|j| {
            if j == 0 {
                0
            } else {
                (schedule[j as usize - 1] + schedule[j as usize]).saturating_sub(1).max(1)
            }
        })
        .collect();

    let mut family = stage(
        match source {
            Source::Family(f) => Ok(f),
            Source::Auto { ref automorphism } => {
                auto_family(g, automorphism.as_deref(), hex_cols, &gap_plan)
            }
        },
        "family",
        "enlarge window",
    )?;
    if (family.rays.len() as u32) < hex_cols {
        return Err(Error::MoreConnectors(format!(
            "family has {} rays, the construction needs {hex_cols}",
            family.rays.len()
        )));
    }
    family.rays.truncate(hex_cols as usize);
    // never trust supplied separations: re-measure
    family.separations = stage(
        crate::family::measure_separations(g, &family.rays),
        "family",
        "enlarge window",
    )?;
    family.schedule = schedule.clone();

    // premise checks
    match mode {
        Mode::Kfat { k } => {
            let required = 2 * k - 1;
            let measured = family.min_separation().unwrap_or(0);
            if measured < required {
                return Err(Error::SeparationTooSmall { measured, required, k });
            }
            for ray in &family.rays {
                let cert = stage(fat_ray_certificate(g, ray, required), "family", "enlarge window")?;
                if cert.certified_end <= cert.certified_start {
                    return Err(Error::FatCertificateFailed {
                        k: required,
                        witness: cert.failure.unwrap_or(0),
                    }
                    .in_stage("family", "enlarge window"));
                }
            }
        }
        Mode::Ultrafat => {
            // d(R_i, R_j) >= K_i + K_j - 1; re-index onto even rays if the
            // supplied family only certifies max{i, j}
            let ok = |fam: &RayFamily| -> bool {
                let n = fam.rays.len();
                (0..n).all(|i| {
                    (i + 1..n).all(|j| {
                        fam.separation(i, j).unwrap_or(0) + 1
                            >= schedule[i] + schedule[j]
                    })
                })
            };
            if !ok(&family) {
                return Err(Error::SeparationTooSmall {
                    measured: family.min_separation().unwrap_or(0),
                    required: schedule
                        .windows(2)
                        .map(|w| w[0] + w[1] - 1)
                        .max()
                        .unwrap_or(1),
                    k: *schedule.last().unwrap(),
                }
                .in_stage("family", "supply more (or better separated) rays"));
            }
        }
    }

    let fam_win = stage(FamilyWin::materialize(g, &family, &schedule), "family", "enlarge window")?;

    // demands: spare candidates per hexagonal edge, in staircase order
    let order = hex_edge_order(hex_rows, hex_cols);
    let demands: Vec<Demand> = order
        .iter()
        .flat_map(|&(p, _)| std::iter::repeat(Demand { pair: p }).take(spare as usize))
        .collect();
    let connectors = stage(choose_connectors(g, &fam_win, &demands), "choose_connectors", "enlarge window")?;
    let aux = stage(build_auxiliary_graph(g, &fam_win, &connectors), "build_auxiliary_graph", "enlarge window")?;
    let hex = stage(
        build_hex_subdivision(g, &fam_win, &aux, &connectors, hex_rows, hex_cols, spare),
        "find_hex_subdivision",
        "more connectors / enlarge window",
    )?;
    let clauses = stage(assemble_hex_subdivision(g, &fam_win, &hex), "assemble_hex_subdivision", "enlarge window")?;
    if !clauses.pass {
        let f = clauses.failures();
        return Err(Error::PipelineStage {
            stage: "assemble_hex_subdivision",
            message: format!("{} clause instance(s) failed, first: {:?}", f.len(), f.first()),
            hint: "enlarge window".into(),
        });
    }

    let contracted = stage(contract_hex_subdivision(g, &fam_win, &hex), "contract_hex_subdivision", "enlarge window")?;

    let (model, verification) = match mode {
        Mode::Kfat { k } => {
            let rep = validate_model(g, &contracted);
            if !rep.valid {
                return Err(Error::PipelineStage {
                    stage: "verify",
                    message: format!("{:?}", rep.violation),
                    hint: "enlarge window".into(),
                });
            }
            let matrix = stage(
                crate::model::distance_matrix(g, &contracted, crate::par::ExecMode::default_mode()),
                "verify",
                "enlarge window",
            )?;
            let fat = fatness_from_matrix(&matrix);
            if fat.achieved.map(|a| a < k).unwrap_or(false) {
                return Err(Error::PipelineStage {
                    stage: "verify",
                    message: format!("achieved fatness {:?} < K = {k}", fat.achieved),
                    hint: "enlarge window".into(),
                });
            }
            let claims = VerificationClaims {
                valid: true,
                fatness: Some(fat),
                ultrafat: None,
                graded: None,
                ultrafat_level: None,
            };
            (contracted, claims)
        }
        Mode::Ultrafat => {
            let graded = stage(graded_strip_check(g, &contracted, &schedule), "contract_hex_subdivision", "enlarge window")?;
            let (final_model, report) =
                stage(regrid_ultrafat(g, &contracted), "regrid_ultrafat", "enlarge window")?;
            if report.final_rows < rows || report.final_cols < cols {
                return Err(Error::PipelineStage {
                    stage: "regrid_ultrafat",
                    message: format!(
                        "re-gridded model is {}x{}, target {rows}x{cols}",
                        report.final_rows, report.final_cols
                    ),
                    hint: "more connectors".into(),
                });
            }
            let level = rows.min(cols);
            let table = stage(ultrafat_table(g, &final_model, level), "verify", "enlarge window")?;
            if !table.passes_to(level) {
                let first = table.rows.iter().find(|r| !r.pass).unwrap();
                return Err(Error::PipelineStage {
                    stage: "verify",
                    message: format!("ultra-fat table fails at level {}: {:?}", first.k, first.witness),
                    hint: "enlarge window".into(),
                });
            }
            let claims = VerificationClaims {
                valid: true,
                fatness: None,
                ultrafat: Some(table),
                graded: Some(graded),
                ultrafat_level: Some(level),
            };
            (final_model, claims)
        }
    };

    Ok(Certificate {
        schema_version: SCHEMA_VERSION.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed,
        graph: GraphDescriptor::new(g.spec(), g.window()),
        mode,
        target_rows: rows,
        target_cols: cols,
        schedule,
        family: FamilyFile::from_family(&family),
        connectors: connectors
            .iter()
            .map(|c| ConnectorFile { pair: c.pair, path: g.tokens(&c.path) })
            .collect(),
        hex_horizontals: hex
            .horizontals
            .iter()
            .map(|h| HexPathFile {
                pair: h.pair,
                rung: h.rung,
                connector: h.connector,
                path: g.tokens(&h.path),
            })
            .collect(),
        clauses,
        model,
        verification,
    })
}

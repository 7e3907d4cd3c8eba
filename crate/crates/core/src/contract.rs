//! Contraction of a hexagonal subdivision into a half-grid model, the
//! staircase re-gridding that turns a column-graded model into one whose
//! corner submodels are uniformly fat, and diverging-ray extraction.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphHandle;
use crate::model::{MinorModel, PatternDescriptor, PatternEdge, PatternVertex};
use crate::pipeline::{hex_height, FamilyWin, HexSubdivision};
use crate::ray::Ray;
use crate::vertex::VertexId;

/// Contract a verified hexagonal subdivision into a half-grid portion model:
/// horizontal branch paths are the subdivision's horizontal paths; branch
/// sets and vertical branch paths are ray subpaths around the attachment
/// points, padded by the per-ray schedule margin so that paths meeting a
/// shared branch set stay schedule-far apart.
pub fn contract_hex_subdivision(
    g: &GraphHandle,
    fam: &FamilyWin,
    hex: &HexSubdivision,
) -> Result<MinorModel> {
    let rows = hex.rows;
    let cols = hex.cols;
    // attachments per ray, keyed by hex height
    let mut attach: Vec<BTreeMap<u32, u32>> = vec![BTreeMap::new(); cols as usize];
    for h in &hex.horizontals {
        let hh = hex_height(h.pair, h.rung);
        attach[h.pair as usize].insert(hh, h.low_pos);
        attach[h.pair as usize + 1].insert(hh, h.high_pos);
    }

    let mut branch_sets = BTreeMap::new();
    let mut branch_paths = BTreeMap::new();
    // per ray: set spans [a_r, b_r] inclusive (positions on the ray)
    let mut spans: Vec<Vec<(u32, u32)>> = Vec::new();
    for i in 0..cols as usize {
        let f = fam.schedule[i];
        let ray = &fam.rays[i];
        let mut ray_spans = Vec::new();
        for r in 0..rows {
            let p1 = attach[i].get(&(2 * r)).copied();
            let p2 = attach[i].get(&(2 * r + 1)).copied();
            let (lo, hi) = match (p1, p2) {
                (Some(a), Some(b)) => (a.min(b), a.max(b)),
                (Some(a), None) | (None, Some(a)) => (a, a),
                (None, None) => {
                    return Err(Error::SpacingInfeasible(format!(
                        "ray {i} has no attachment for grid row {r}"
                    )))
                }
            };
            let a = if r > 0 {
                lo.checked_sub(f).ok_or_else(|| {
                    Error::SpacingInfeasible(format!("ray {i} row {r}: margin {f} before position {lo}"))
                })?
            } else {
                lo
            };
            let b = if r + 1 < rows { hi + f } else { hi };
            if b as usize >= ray.idxs.len() {
                return Err(Error::SpacingInfeasible(format!(
                    "ray {i} row {r}: margin {f} past the ray's window extent"
                )));
            }
            if let Some(&(_, prev_b)) = ray_spans.last() {
                if a <= prev_b {
                    return Err(Error::SpacingInfeasible(format!(
                        "ray {i} rows {} and {r} overlap after margins",
                        r - 1
                    )));
                }
            }
            ray_spans.push((a, b));
        }
        for (r, &(a, b)) in ray_spans.iter().enumerate() {
            let set: BTreeSet<VertexId> =
                (a..=b).map(|p| g.vid(ray.idxs[p as usize]).clone()).collect();
            branch_sets.insert(PatternVertex(i as u32, r as u32), set);
            if r + 1 < ray_spans.len() {
                let (a2, _) = ray_spans[r + 1];
                let path: Vec<VertexId> =
                    (b..=a2).map(|p| g.vid(ray.idxs[p as usize]).clone()).collect();
                branch_paths.insert(
                    PatternEdge::new(
                        PatternVertex(i as u32, r as u32),
                        PatternVertex(i as u32, r as u32 + 1),
                    ),
                    path,
                );
            }
        }
        spans.push(ray_spans);
    }
    for h in &hex.horizontals {
        let r = h.rung;
        branch_paths.insert(
            PatternEdge::new(PatternVertex(h.pair, r), PatternVertex(h.pair + 1, r)),
            h.path.iter().map(|&v| g.vid(v).clone()).collect(),
        );
    }
    Ok(MinorModel {
        pattern: PatternDescriptor::HalfgridPortion { rows, cols, excised: 0 },
        branch_sets,
        branch_paths,
    })
}

/// Staircase assignment for the re-gridding: new ray n at hex height m takes
/// its branch set from old column `cols[n][m]`, with rung heights (n+m even)
/// sharing their column with the right-hand neighbor ray.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Staircase {
    /// cols[n][m] = old column for new ray n at hex height m.
    pub cols: Vec<Vec<u32>>,
    pub max_col: u32,
    /// number of hex heights laid out (2 * final rows)
    pub heights: u32,
}

/// Greedy minimal staircase for `new_cols` rays and `2 * new_rows` heights.
/// Each assignment respects the grading floor: a piece serving final element
/// (n, r) must sit at an old column of grade at least max(n, r) (one more for
/// rung columns, which serve the right neighbor too).
pub fn compute_staircase(new_cols: u32, new_rows: u32) -> Staircase {
    let n = new_cols as usize;
    let heights = 2 * new_rows;
    let mut free = vec![0u32; n];
    let mut cols = vec![vec![0u32; heights as usize]; n];
    for m in 0..heights {
        let mut done = vec![false; n];
        let mut p = m % 2;
        while (p as usize) + 1 < n {
            let floor = (p + 1).max(m / 2);
            let r = free[p as usize].max(free[p as usize + 1]).max(floor);
            cols[p as usize][m as usize] = r;
            cols[p as usize + 1][m as usize] = r;
            free[p as usize] = r + 1;
            free[p as usize + 1] = r + 1;
            done[p as usize] = true;
            done[p as usize + 1] = true;
            p += 2;
        }
        for (nn, d) in done.iter().enumerate() {
            if !*d {
                let floor = (nn as u32).max(m / 2);
                let r = free[nn].max(floor);
                cols[nn][m as usize] = r;
                free[nn] = r + 1;
            }
        }
    }
    let max_col = cols.iter().flat_map(|row| row.iter().copied()).max().unwrap_or(0);
    Staircase { cols, max_col, heights }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegridReport {
    pub staircase: Staircase,
    pub final_rows: u32,
    pub final_cols: u32,
    /// passthrough for degenerate single-column sources
    pub passthrough: bool,
}

fn old_vertical_path(m: &MinorModel, c: u32, r: u32) -> Result<Vec<VertexId>> {
    let e = PatternEdge::new(PatternVertex(c, r), PatternVertex(c, r + 1));
    let p = m
        .branch_paths
        .get(&e)
        .ok_or_else(|| Error::UnknownElement(e.to_string()))?;
    // orient from the (c, r) side
    let lower = &m.branch_sets[&PatternVertex(c, r)];
    if lower.contains(&p[0]) {
        Ok(p.clone())
    } else {
        Ok(p.iter().rev().cloned().collect())
    }
}

fn old_horizontal_path(m: &MinorModel, c: u32, r: u32) -> Result<Vec<VertexId>> {
    let e = PatternEdge::new(PatternVertex(c, r), PatternVertex(c + 1, r));
    let p = m
        .branch_paths
        .get(&e)
        .ok_or_else(|| Error::UnknownElement(e.to_string()))?;
    let left = &m.branch_sets[&PatternVertex(c, r)];
    if left.contains(&p[0]) {
        Ok(p.clone())
    } else {
        Ok(p.iter().rev().cloned().collect())
    }
}

fn walk_within_set(
    g: &GraphHandle,
    set: &BTreeSet<VertexId>,
    from: &VertexId,
    to: &VertexId,
) -> Result<Vec<VertexId>> {
    if from == to {
        return Ok(vec![from.clone()]);
    }
    let idxs: BTreeSet<u32> = set.iter().filter_map(|v| g.idx(v)).collect();
    let from_i = g.require_idx(from)?;
    let to_i = g.require_idx(to)?;
    let mut prev: HashMap<u32, u32> = HashMap::new();
    let mut q = std::collections::VecDeque::new();
    prev.insert(from_i, from_i);
    q.push_back(from_i);
    while let Some(v) = q.pop_front() {
        for &w in g.adj_row(v) {
            if idxs.contains(&w) && !prev.contains_key(&w) {
                prev.insert(w, v);
                if w == to_i {
                    let mut path = vec![to_i];
                    let mut cur = to_i;
                    while cur != from_i {
                        cur = prev[&cur];
                        path.push(cur);
                    }
                    path.reverse();
                    return Ok(path.into_iter().map(|i| g.vid(i).clone()).collect());
                }
                q.push_back(w);
            }
        }
    }
    Err(Error::InvalidModel {
        clause: "connected".into(),
        detail: format!("no walk from {from} to {to} inside a branch set"),
    })
}

/// Thread along old row `row` from column `c1` to column `c2`: alternating
/// old horizontal branch paths and walks through the old branch sets between
/// them. Returns a simple path from a vertex of V(c1,row) to one of V(c2,row).
fn thread_along_row(
    g: &GraphHandle,
    m: &MinorModel,
    row: u32,
    c1: u32,
    c2: u32,
) -> Result<Vec<VertexId>> {
    debug_assert!(c1 < c2);
    let mut path: Vec<VertexId> = Vec::new();
    for c in c1..c2 {
        let e = old_horizontal_path(m, c, row)?;
        if path.is_empty() {
            path.extend(e);
        } else {
            let set = &m.branch_sets[&PatternVertex(c, row)];
            let last = path.last().unwrap().clone();
            let bridge = walk_within_set(g, set, &last, &e[0])?;
            path.extend(bridge.into_iter().skip(1));
            path.extend(e.into_iter().skip(1));
        }
    }
    Ok(path)
}

/// Re-grid a column-graded half-grid model (strip beyond column c is
/// schedule[c]-fat, schedule = identity) into a model whose corner submodels
/// are K-fat for every checked K: new rays run along the old rows, climbing
/// the staircase of old columns; old vertical branch paths become the new
/// rungs.
pub fn regrid_ultrafat(g: &GraphHandle, m: &MinorModel) -> Result<(MinorModel, RegridReport)> {
    let PatternDescriptor::HalfgridPortion { rows: old_rows, cols: old_cols, excised: 0 } =
        m.pattern
    else {
        return Err(Error::WrongPattern(format!("{:?}", m.pattern)));
    };
    // precondition: strip beyond column c is c-fat
    let schedule: Vec<u32> = (0..old_cols).collect();
    crate::model::graded_strip_check(g, m, &schedule)?;

    if old_cols == 1 {
        // degenerate single-column source: already a single-ray model
        return Ok((
            m.clone(),
            RegridReport {
                staircase: Staircase { cols: vec![], max_col: 0, heights: 0 },
                final_rows: old_rows,
                final_cols: 1,
                passthrough: true,
            },
        ));
    }

    let final_cols = old_rows;
    // largest number of rows whose staircase fits in the available columns
    let mut final_rows = 0u32;
    loop {
        let s = compute_staircase(final_cols, final_rows + 1);
        if s.max_col >= old_cols {
            break;
        }
        final_rows += 1;
    }
    if final_rows == 0 {
        return Err(Error::SpacingInfeasible(format!(
            "source model has only {old_cols} columns; staircase needs more"
        )));
    }
    let staircase = compute_staircase(final_cols, final_rows);

    let mut branch_sets = BTreeMap::new();
    let mut branch_paths = BTreeMap::new();
    for n in 0..final_cols {
        let jrow = &staircase.cols[n as usize];
        for r in 0..final_rows {
            let j_lo = jrow[(2 * r) as usize];
            let j_hi = jrow[(2 * r + 1) as usize];
            // merged branch set: V(j_lo, n), the thread between, V(j_hi, n)
            let mut set: BTreeSet<VertexId> = m.branch_sets[&PatternVertex(j_lo, n)].clone();
            set.extend(m.branch_sets[&PatternVertex(j_hi, n)].iter().cloned());
            set.extend(thread_along_row(g, m, n, j_lo, j_hi)?);
            branch_sets.insert(PatternVertex(n, r), set);
            // new vertical path: thread from height 2r+1 to height 2r+2
            if r + 1 < final_rows {
                let j_next = jrow[(2 * r + 2) as usize];
                let path = thread_along_row(g, m, n, j_hi, j_next)?;
                branch_paths.insert(
                    PatternEdge::new(PatternVertex(n, r), PatternVertex(n, r + 1)),
                    path,
                );
            }
            // new rung to the right neighbor at the parity-matching height
            if n + 1 < final_cols {
                let mh = if (n + 2 * r) % 2 == 0 { 2 * r } else { 2 * r + 1 };
                let j = staircase.cols[n as usize][mh as usize];
                debug_assert_eq!(j, staircase.cols[n as usize + 1][mh as usize]);
                let path = old_vertical_path(m, j, n)?;
                branch_paths.insert(
                    PatternEdge::new(PatternVertex(n, r), PatternVertex(n + 1, r)),
                    path,
                );
            }
        }
    }
    let out = MinorModel {
        pattern: PatternDescriptor::HalfgridPortion { rows: final_rows, cols: final_cols, excised: 0 },
        branch_sets,
        branch_paths,
    };
    Ok((
        out,
        RegridReport { staircase, final_rows, final_cols, passthrough: false },
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationRow {
    pub i: u32,
    pub j: u32,
    pub k: u32,
    /// ray positions the tails start at
    pub cut_i: u32,
    pub cut_j: u32,
    pub measured: u32,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct ExtractedRays {
    pub rays: Vec<Ray>,
    /// marks[i][r] = position on ray i where the branch set of row r begins
    pub marks: Vec<Vec<u32>>,
    pub certified_level: u32,
    pub table: Vec<SeparationRow>,
}

/// One ray per vertical of the pattern, each inside the union of that
/// column's branch sets and vertical paths, with tails past the first K
/// levels separated by at least K for every certified K.
pub fn extract_diverging_rays(
    g: &GraphHandle,
    m: &MinorModel,
    count: u32,
) -> Result<ExtractedRays> {
    let PatternDescriptor::HalfgridPortion { rows, cols, excised: 0 } = m.pattern else {
        return Err(Error::WrongPattern(format!("{:?}", m.pattern)));
    };
    if count > cols {
        return Err(Error::PremiseViolated(format!(
            "requested {count} rays but the pattern has {cols} columns"
        )));
    }
    // certified resolution from the ultra-fatness table
    let kmax = rows.min(cols);
    let table = crate::model::ultrafat_table(g, m, kmax)?;
    let mut certified = 0u32;
    for row in &table.rows {
        if row.pass {
            certified = row.k;
        } else {
            break;
        }
    }

    let mut rays = Vec::new();
    let mut marks = Vec::new();
    for i in 0..count {
        let mut path: Vec<VertexId> = Vec::new();
        let mut my_marks = Vec::new();
        for r in 0..rows {
            let set = &m.branch_sets[&PatternVertex(i, r)];
            if r == 0 {
                let start = set.iter().next().unwrap().clone();
                path.push(start);
            }
            my_marks.push(path.len() as u32 - 1);
            if r + 1 < rows {
                let e = {
                    let p = old_vertical_path(m, i, r)?;
                    p
                };
                // walk inside the set from where we are to the path's start
                let last = path.last().unwrap().clone();
                let bridge = walk_within_set(g, set, &last, &e[0])?;
                path.extend(bridge.into_iter().skip(1));
                path.extend(e.into_iter().skip(1));
            }
        }
        // drop accidental revisits (walks are simple by construction, but the
        // concatenation is pruned defensively)
        let mut seen = BTreeSet::new();
        for v in &path {
            if !seen.insert(v.clone()) {
                return Err(Error::ExtractionFailed(format!("column {i} thread revisits {v}")));
            }
        }
        rays.push(Ray::finite(path));
        marks.push(my_marks);
    }

    let idxs: Vec<Vec<u32>> = rays.iter().map(|r| r.materialize(g)).collect::<Result<_>>()?;
    let mut out_table = Vec::new();
    for i in 0..count {
        for j in i + 1..count {
            let base = j.max(i); // = j
            for k in base..=certified {
                let cut_level = k.min(rows - 1);
                let ci = marks[i as usize][cut_level as usize];
                let cj = marks[j as usize][cut_level as usize];
                let ti = &idxs[i as usize][ci as usize..];
                let tj = &idxs[j as usize][cj as usize..];
                let d = g.dist_idx(ti, tj);
                let measured = d.lower_bound.min(d.window_dist.unwrap_or(u32::MAX));
                out_table.push(SeparationRow {
                    i,
                    j,
                    k,
                    cut_i: ci,
                    cut_j: cj,
                    measured,
                    pass: measured >= k,
                });
            }
        }
    }
    Ok(ExtractedRays { rays, marks, certified_level: certified, table: out_table })
}

//! Minor models and their verification: validity, K-fatness, ultra-fatness
//! tables, submodels, and divergence probes.
//!
//! A model assigns a disjoint connected branch set to every pattern vertex
//! and an internally disjoint branch path to every pattern edge. Fatness is
//! the minimum ambient distance over all non-exempt element pairs; the only
//! exempt pairs are a branch path with one of its own two endpoint branch
//! sets. Two branch paths sharing an endpoint branch set are not exempt.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{DistanceResult, GraphHandle};
use crate::par::{indexed_map, ExecMode};
use crate::vertex::VertexId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatternVertex(pub u32, pub u32);

impl fmt::Display for PatternVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.0, self.1)
    }
}

impl FromStr for PatternVertex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s.split_once(',').ok_or_else(|| Error::UnknownElement(s.into()))?;
        Ok(PatternVertex(
            a.parse().map_err(|_| Error::UnknownElement(s.into()))?,
            b.parse().map_err(|_| Error::UnknownElement(s.into()))?,
        ))
    }
}

impl Serialize for PatternVertex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

struct PvVisitor;
impl Visitor<'_> for PvVisitor {
    type Value = PatternVertex;
    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "a pattern vertex `n,m`")
    }
    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<PatternVertex, E> {
        v.parse().map_err(|e: Error| E::custom(e.to_string()))
    }
}

impl<'de> Deserialize<'de> for PatternVertex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_str(PvVisitor)
    }
}

/// Normalized pattern edge (smaller endpoint first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatternEdge(pub PatternVertex, pub PatternVertex);

impl PatternEdge {
    pub fn new(a: PatternVertex, b: PatternVertex) -> Self {
        if a <= b {
            PatternEdge(a, b)
        } else {
            PatternEdge(b, a)
        }
    }

    pub fn incident(&self, v: PatternVertex) -> bool {
        self.0 == v || self.1 == v
    }
}

impl fmt::Display for PatternEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.0, self.1)
    }
}

impl FromStr for PatternEdge {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s.split_once('|').ok_or_else(|| Error::UnknownElement(s.into()))?;
        Ok(PatternEdge::new(a.parse()?, b.parse()?))
    }
}

impl Serialize for PatternEdge {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

struct PeVisitor;
impl Visitor<'_> for PeVisitor {
    type Value = PatternEdge;
    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "a pattern edge `n,m|n',m'`")
    }
    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<PatternEdge, E> {
        v.parse().map_err(|e: Error| E::custom(e.to_string()))
    }
}

impl<'de> Deserialize<'de> for PatternEdge {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_str(PeVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PatternDescriptor {
    /// Vertices (n,m) with n < cols, m < rows, excluding the excised corner
    /// square [0,excised) x [0,excised); grid adjacency induced on that set.
    HalfgridPortion { rows: u32, cols: u32, excised: u32 },
    /// Columns n < cols at heights h < rows; vertical edges everywhere,
    /// rung (n,h)-(n+1,h) iff n+h is even.
    HexhalfgridPortion { rows: u32, cols: u32 },
    /// `count` disjoint paths of `len` vertices each; vertex (ray, position).
    OmegaRays { count: u32, len: u32 },
    /// Arbitrary finite pattern; vertex (0, i) is named `names[i]`.
    Explicit { names: Vec<String>, edges: Vec<(u32, u32)> },
}

impl PatternDescriptor {
    pub fn contains_vertex(&self, v: PatternVertex) -> bool {
        match self {
            PatternDescriptor::HalfgridPortion { rows, cols, excised } => {
                v.0 < *cols && v.1 < *rows && !(v.0 < *excised && v.1 < *excised)
            }
            PatternDescriptor::HexhalfgridPortion { rows, cols } => v.0 < *cols && v.1 < *rows,
            PatternDescriptor::OmegaRays { count, len } => v.0 < *count && v.1 < *len,
            PatternDescriptor::Explicit { names, .. } => v.0 == 0 && (v.1 as usize) < names.len(),
        }
    }

    pub fn vertices(&self) -> Vec<PatternVertex> {
        let mut out = Vec::new();
        match self {
            PatternDescriptor::HalfgridPortion { rows, cols, .. } => {
                for n in 0..*cols {
                    for m in 0..*rows {
                        let v = PatternVertex(n, m);
                        if self.contains_vertex(v) {
                            out.push(v);
                        }
                    }
                }
            }
            PatternDescriptor::HexhalfgridPortion { rows, cols } => {
                for n in 0..*cols {
                    for h in 0..*rows {
                        out.push(PatternVertex(n, h));
                    }
                }
            }
            PatternDescriptor::OmegaRays { count, len } => {
                for r in 0..*count {
                    for t in 0..*len {
                        out.push(PatternVertex(r, t));
                    }
                }
            }
            PatternDescriptor::Explicit { names, .. } => {
                for i in 0..names.len() as u32 {
                    out.push(PatternVertex(0, i));
                }
            }
        }
        out.sort();
        out
    }

    pub fn edges(&self) -> Vec<PatternEdge> {
        let mut out = Vec::new();
        match self {
            PatternDescriptor::HalfgridPortion { rows, cols, .. } => {
                for n in 0..*cols {
                    for m in 0..*rows {
                        let v = PatternVertex(n, m);
                        if !self.contains_vertex(v) {
                            continue;
                        }
                        for w in [PatternVertex(n + 1, m), PatternVertex(n, m + 1)] {
                            if self.contains_vertex(w) {
                                out.push(PatternEdge::new(v, w));
                            }
                        }
                    }
                }
            }
            PatternDescriptor::HexhalfgridPortion { rows, cols } => {
                for n in 0..*cols {
                    for h in 0..*rows {
                        let v = PatternVertex(n, h);
                        if h + 1 < *rows {
                            out.push(PatternEdge::new(v, PatternVertex(n, h + 1)));
                        }
                        if n + 1 < *cols && (n + h) % 2 == 0 {
                            out.push(PatternEdge::new(v, PatternVertex(n + 1, h)));
                        }
                    }
                }
            }
            PatternDescriptor::OmegaRays { count, len } => {
                for r in 0..*count {
                    for t in 0..len.saturating_sub(1) {
                        out.push(PatternEdge::new(PatternVertex(r, t), PatternVertex(r, t + 1)));
                    }
                }
            }
            PatternDescriptor::Explicit { edges, .. } => {
                for (a, b) in edges {
                    out.push(PatternEdge::new(PatternVertex(0, *a), PatternVertex(0, *b)));
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Grid coordinates of a pattern vertex for the [K]^2 submodel rule.
    /// HalfgridPortion vertices carry them directly; explicit patterns
    /// qualify when every name parses as "n,m".
    pub fn grid_coords(&self, v: PatternVertex) -> Option<(u32, u32)> {
        match self {
            PatternDescriptor::HalfgridPortion { .. } => Some((v.0, v.1)),
            PatternDescriptor::Explicit { names, .. } => {
                let name = names.get(v.1 as usize)?;
                let pv: PatternVertex = name.parse().ok()?;
                Some((pv.0, pv.1))
            }
            _ => None,
        }
    }

    pub fn is_halfgrid_like(&self) -> bool {
        match self {
            PatternDescriptor::HalfgridPortion { .. } => true,
            PatternDescriptor::Explicit { names, .. } => {
                names.iter().all(|n| n.parse::<PatternVertex>().is_ok())
            }
            _ => false,
        }
    }

    pub fn extent(&self) -> u32 {
        match self {
            PatternDescriptor::HalfgridPortion { rows, cols, .. } => (*rows).max(*cols),
            PatternDescriptor::HexhalfgridPortion { rows, cols } => (*rows).max(*cols),
            PatternDescriptor::OmegaRays { count, len } => (*count).max(*len),
            PatternDescriptor::Explicit { names, .. } => names.len() as u32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ElementId {
    Vertex(PatternVertex),
    Edge(PatternEdge),
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementId::Vertex(v) => write!(f, "V({v})"),
            ElementId::Edge(e) => write!(f, "E({e})"),
        }
    }
}

impl ElementId {
    /// Human-readable label; explicit patterns report their vertex names.
    pub fn label(&self, pattern: &PatternDescriptor) -> String {
        let name = |v: &PatternVertex| -> String {
            match pattern {
                PatternDescriptor::Explicit { names, .. } => names
                    .get(v.1 as usize)
                    .cloned()
                    .unwrap_or_else(|| v.to_string()),
                _ => v.to_string(),
            }
        };
        match self {
            ElementId::Vertex(v) => format!("V({})", name(v)),
            ElementId::Edge(e) => format!("E({}|{})", name(&e.0), name(&e.1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinorModel {
    pub pattern: PatternDescriptor,
    pub branch_sets: BTreeMap<PatternVertex, BTreeSet<VertexId>>,
    pub branch_paths: BTreeMap<PatternEdge, Vec<VertexId>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub clause: String,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub violation: Option<Violation>,
    /// Set when a vertex fell outside the window: verdict is indeterminate.
    pub indeterminate: Option<String>,
}

impl ValidityReport {
    fn ok() -> Self {
        ValidityReport { valid: true, violation: None, indeterminate: None }
    }
    fn fail(clause: &str, detail: String) -> Self {
        ValidityReport {
            valid: false,
            violation: Some(Violation { clause: clause.into(), detail }),
            indeterminate: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FatnessReport {
    /// Maximum K such that the model is K-fat over all checked pairs; `None`
    /// means no non-exempt pair put a bound on it within the window.
    pub achieved: Option<u32>,
    pub exact: bool,
    pub violating_pair: Option<(String, String, u32)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UltraRow {
    pub k: u32,
    pub pass: bool,
    pub min_observed: Option<u32>,
    pub exact: bool,
    pub witness: Option<(String, String, u32)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UltraFatTable {
    pub rows: Vec<UltraRow>,
}

impl UltraFatTable {
    pub fn passes_to(&self, kmax: u32) -> bool {
        self.rows.iter().filter(|r| r.k <= kmax).all(|r| r.pass)
    }
}

impl MinorModel {
    pub fn elements(&self) -> Vec<ElementId> {
        let mut out: Vec<ElementId> =
            self.branch_sets.keys().map(|v| ElementId::Vertex(*v)).collect();
        out.extend(self.branch_paths.keys().map(|e| ElementId::Edge(*e)));
        out
    }

    pub fn element_vertices(&self, e: &ElementId) -> &dyn ElementVerts {
        match e {
            ElementId::Vertex(v) => self.branch_sets.get(v).expect("element exists"),
            ElementId::Edge(pe) => self.branch_paths.get(pe).expect("element exists"),
        }
    }

    /// Exempt pairs are exactly a branch path with one of its two endpoint
    /// branch sets.
    pub fn exempt(a: &ElementId, b: &ElementId) -> bool {
        match (a, b) {
            (ElementId::Vertex(v), ElementId::Edge(e)) | (ElementId::Edge(e), ElementId::Vertex(v)) => {
                e.incident(*v)
            }
            _ => false,
        }
    }

    pub fn all_vertices(&self) -> BTreeSet<VertexId> {
        let mut out = BTreeSet::new();
        for s in self.branch_sets.values() {
            out.extend(s.iter().cloned());
        }
        for p in self.branch_paths.values() {
            out.extend(p.iter().cloned());
        }
        out
    }
}

pub trait ElementVerts {
    fn verts(&self) -> Vec<&VertexId>;
}

impl ElementVerts for BTreeSet<VertexId> {
    fn verts(&self) -> Vec<&VertexId> {
        self.iter().collect()
    }
}

impl ElementVerts for Vec<VertexId> {
    fn verts(&self) -> Vec<&VertexId> {
        self.iter().collect()
    }
}

/// Confirm or refute every model invariant, naming the first violated clause.
pub fn validate_model(g: &GraphHandle, m: &MinorModel) -> ValidityReport {
    // window membership first: anything outside makes the verdict indeterminate
    for v in m.all_vertices() {
        if !g.contains(&v) {
            return ValidityReport {
                valid: false,
                violation: None,
                indeterminate: Some(v.token()),
            };
        }
    }

    let pvs = m.pattern.vertices();
    for pv in &pvs {
        match m.branch_sets.get(pv) {
            None => return ValidityReport::fail("coverage", format!("pattern vertex {pv} has no branch set")),
            Some(s) if s.is_empty() => {
                return ValidityReport::fail("coverage", format!("branch set of {pv} is empty"))
            }
            _ => {}
        }
    }
    for pv in m.branch_sets.keys() {
        if !m.pattern.contains_vertex(*pv) {
            return ValidityReport::fail("coverage", format!("branch set for foreign vertex {pv}"));
        }
    }
    let pes = m.pattern.edges();
    for pe in &pes {
        if !m.branch_paths.contains_key(pe) {
            return ValidityReport::fail("coverage", format!("pattern edge {pe} has no branch path"));
        }
    }
    for pe in m.branch_paths.keys() {
        if !pes.contains(pe) {
            return ValidityReport::fail("coverage", format!("branch path for foreign edge {pe}"));
        }
    }

    // disjointness of branch sets
    let mut owner: BTreeMap<&VertexId, PatternVertex> = BTreeMap::new();
    for (pv, s) in &m.branch_sets {
        for v in s {
            if let Some(prev) = owner.insert(v, *pv) {
                return ValidityReport::fail(
                    "disjoint",
                    format!("vertex {v} lies in branch sets {prev} and {pv}"),
                );
            }
        }
    }

    // connectivity of each branch set
    for (pv, s) in &m.branch_sets {
        if !set_connected(g, s) {
            return ValidityReport::fail("connected", format!("branch set {pv} is not connected"));
        }
    }

    // each branch path: a path, endpoints in the two incident sets, interior
    // avoiding all branch sets
    for (pe, p) in &m.branch_paths {
        if p.is_empty() {
            return ValidityReport::fail("path", format!("branch path {pe} is empty"));
        }
        let mut seen = BTreeSet::new();
        for v in p {
            if !seen.insert(v) {
                return ValidityReport::fail("path", format!("branch path {pe} repeats {v}"));
            }
        }
        for w in p.windows(2) {
            let i = g.idx(&w[0]).expect("in window");
            let j = g.idx(&w[1]).expect("in window");
            if !g.adj_row(i).contains(&j) {
                return ValidityReport::fail(
                    "path",
                    format!("branch path {pe}: {} and {} are not adjacent", w[0], w[1]),
                );
            }
        }
        let first = p.first().unwrap();
        let last = p.last().unwrap();
        let (a, b) = (pe.0, pe.1);
        let sa = &m.branch_sets[&a];
        let sb = &m.branch_sets[&b];
        let fwd = sa.contains(first) && sb.contains(last);
        let rev = sb.contains(first) && sa.contains(last);
        if !(fwd || rev) {
            return ValidityReport::fail(
                "endpoints",
                format!("branch path {pe} does not run between its branch sets"),
            );
        }
        for v in &p[1..p.len().saturating_sub(1)] {
            if let Some(pv) = owner.get(v) {
                return ValidityReport::fail(
                    "interior",
                    format!("branch path {pe} interior meets branch set {pv} at {v}"),
                );
            }
        }
        // endpoints may not sit in foreign sets either
        for v in [first, last] {
            if let Some(pv) = owner.get(v) {
                if !pe.incident(*pv) {
                    return ValidityReport::fail(
                        "interior",
                        format!("branch path {pe} endpoint {v} lies in foreign set {pv}"),
                    );
                }
            }
        }
    }

    // internal disjointness across branch paths
    let mut interior_owner: BTreeMap<&VertexId, PatternEdge> = BTreeMap::new();
    let mut endpoint_owner: BTreeMap<&VertexId, PatternEdge> = BTreeMap::new();
    for (pe, p) in &m.branch_paths {
        for (i, v) in p.iter().enumerate() {
            let is_end = i == 0 || i + 1 == p.len();
            if let Some(other) = interior_owner.get(v) {
                return ValidityReport::fail(
                    "internally-disjoint",
                    format!("paths {other} and {pe} share {v}"),
                );
            }
            if is_end {
                endpoint_owner.insert(v, *pe);
            } else {
                if let Some(other) = endpoint_owner.get(v) {
                    return ValidityReport::fail(
                        "internally-disjoint",
                        format!("paths {other} and {pe} share {v}"),
                    );
                }
                interior_owner.insert(v, *pe);
            }
        }
    }

    ValidityReport::ok()
}

fn set_connected(g: &GraphHandle, s: &BTreeSet<VertexId>) -> bool {
    if s.len() <= 1 {
        return true;
    }
    let idxs: Vec<u32> = s.iter().filter_map(|v| g.idx(v)).collect();
    let inset: BTreeSet<u32> = idxs.iter().copied().collect();
    let mut seen = BTreeSet::new();
    let mut stack = vec![idxs[0]];
    seen.insert(idxs[0]);
    while let Some(v) = stack.pop() {
        for &w in g.adj_row(v) {
            if inset.contains(&w) && seen.insert(w) {
                stack.push(w);
            }
        }
    }
    seen.len() == inset.len()
}

/// Pairwise distances between all model elements (one BFS per element).
pub struct DistanceMatrix {
    pub elements: Vec<ElementId>,
    pub dist: Vec<Vec<DistanceResult>>,
}

impl DistanceMatrix {
    pub fn get(&self, i: usize, j: usize) -> DistanceResult {
        if i == j {
            return DistanceResult { window_dist: Some(0), lower_bound: 0, exact: true };
        }
        if i < j {
            self.dist[i][j - i - 1]
        } else {
            self.dist[j][i - j - 1]
        }
    }
}

pub fn distance_matrix(g: &GraphHandle, m: &MinorModel, mode: ExecMode) -> Result<DistanceMatrix> {
    let elements = m.elements();
    let idx_sets: Vec<Vec<u32>> = elements
        .iter()
        .map(|e| {
            let mut v: Vec<u32> = m
                .element_vertices(e)
                .verts()
                .into_iter()
                .map(|x| g.require_idx(x))
                .collect::<Result<_>>()?;
            v.sort_unstable();
            v.dedup();
            Ok(v)
        })
        .collect::<Result<_>>()?;

    let n = elements.len();
    let dist = indexed_map(n, mode, |i| {
        let field = g.bfs_field(&idx_sets[i]);
        let mut row = Vec::with_capacity(n - i - 1);
        for j in i + 1..n {
            let mut wd = u32::MAX;
            for &t in &idx_sets[j] {
                wd = wd.min(field[t as usize]);
            }
            let wd = if wd == u32::MAX { None } else { Some(wd) };
            row.push(finalize_pair(g, &idx_sets[i], &idx_sets[j], wd, &field));
        }
        row
    });
    Ok(DistanceMatrix { elements, dist })
}

fn finalize_pair(
    g: &GraphHandle,
    a: &[u32],
    b: &[u32],
    wd: Option<u32>,
    field: &[u32],
) -> DistanceResult {
    let r = g.radius() + 1;
    let maxdb = |s: &[u32]| s.iter().map(|&i| g.dist_base(i)).max().unwrap_or(0);
    let escape = r.saturating_sub(maxdb(a)) + r.saturating_sub(maxdb(b));
    match wd {
        Some(d) if d <= escape => DistanceResult { window_dist: Some(d), lower_bound: d, exact: true },
        Some(d) => DistanceResult { window_dist: Some(d), lower_bound: escape, exact: false },
        None => {
            let sealed = !field
                .iter()
                .enumerate()
                .any(|(i, &d)| d != u32::MAX && g.dist_base(i as u32) == g.radius());
            if sealed {
                DistanceResult { window_dist: None, lower_bound: u32::MAX, exact: true }
            } else {
                DistanceResult { window_dist: None, lower_bound: escape, exact: false }
            }
        }
    }
}

/// Minimum proven lower bound over the included non-exempt pairs; the exact
/// flag states whether the minimum is attained by an exactly measured pair
/// (so the reported value is the true fatness, not just a bound).
fn fatness_over(matrix: &DistanceMatrix, include: &[bool]) -> (Option<u32>, bool, Option<(usize, usize, u32)>) {
    let n = matrix.elements.len();
    let mut best: Option<(u32, usize, usize, bool)> = None;
    for i in 0..n {
        if !include[i] {
            continue;
        }
        for j in i + 1..n {
            if !include[j] {
                continue;
            }
            if MinorModel::exempt(&matrix.elements[i], &matrix.elements[j]) {
                continue;
            }
            let d = matrix.get(i, j);
            let bound = d.lower_bound;
            if bound == u32::MAX {
                continue; // provably unreachable pair constrains nothing
            }
            if best.map(|(b, _, _, _)| bound < b).unwrap_or(true) {
                best = Some((bound, i, j, d.exact));
            }
        }
    }
    match best {
        Some((b, i, j, exact)) => (Some(b), exact, Some((i, j, b))),
        None => (None, true, None),
    }
}

/// Every included non-exempt pair's comparison against `k` is decided: the
/// distance is either provably at least k or witnessed below k.
fn decided_at(matrix: &DistanceMatrix, include: &[bool], k: u32) -> bool {
    let n = matrix.elements.len();
    for i in 0..n {
        if !include[i] {
            continue;
        }
        for j in i + 1..n {
            if !include[j] || MinorModel::exempt(&matrix.elements[i], &matrix.elements[j]) {
                continue;
            }
            let d = matrix.get(i, j);
            if !(d.at_least(k) || d.less_than(k)) {
                return false;
            }
        }
    }
    true
}

/// Minimum ambient distance over all non-exempt element pairs.
pub fn fatness(g: &GraphHandle, m: &MinorModel) -> Result<FatnessReport> {
    let validity = validate_model(g, m);
    if let Some(v) = validity.indeterminate {
        return Err(Error::IndeterminateModel(v));
    }
    if !validity.valid {
        let v = validity.violation.unwrap();
        return Err(Error::InvalidModel { clause: v.clause, detail: v.detail });
    }
    let matrix = distance_matrix(g, m, ExecMode::default_mode())?;
    Ok(fatness_from_matrix(&matrix))
}

pub fn fatness_from_matrix(matrix: &DistanceMatrix) -> FatnessReport {
    fatness_from_matrix_labeled(matrix, None)
}

pub fn fatness_from_matrix_labeled(
    matrix: &DistanceMatrix,
    pattern: Option<&PatternDescriptor>,
) -> FatnessReport {
    let label = |e: &ElementId| match pattern {
        Some(p) => e.label(p),
        None => e.to_string(),
    };
    let include = vec![true; matrix.elements.len()];
    let (achieved, exact, pair) = fatness_over(matrix, &include);
    FatnessReport {
        achieved,
        exact,
        violating_pair: pair
            .map(|(i, j, d)| (label(&matrix.elements[i]), label(&matrix.elements[j]), d)),
    }
}

fn element_in_corner_submodel(pattern: &PatternDescriptor, e: &ElementId, k: u32) -> Result<bool> {
    let coords = |v: PatternVertex| -> Result<(u32, u32)> {
        pattern.grid_coords(v).ok_or_else(|| Error::WrongPattern(format!("{:?}", pattern)))
    };
    Ok(match e {
        ElementId::Vertex(v) => {
            let (n, m) = coords(*v)?;
            n >= k || m >= k
        }
        ElementId::Edge(pe) => {
            let (n1, m1) = coords(pe.0)?;
            let (n2, m2) = coords(pe.1)?;
            (n1 >= k && n2 >= k) || (m1 >= k && m2 >= k)
        }
    })
}

/// The submodel on pattern vertices outside the K x K corner, with the edge
/// rule applied literally: keep (n,m)(n',m') iff n,n' >= K or m,m' >= K.
pub fn submodel_beyond(m: &MinorModel, k: u32) -> Result<MinorModel> {
    if !m.pattern.is_halfgrid_like() {
        return Err(Error::WrongPattern(format!("{:?}", m.pattern)));
    }
    let extent = m.pattern.extent();
    if k > extent {
        return Err(Error::LevelExceedsPattern { k, extent });
    }
    let mut out = MinorModel {
        pattern: match &m.pattern {
            PatternDescriptor::HalfgridPortion { rows, cols, excised } => {
                PatternDescriptor::HalfgridPortion {
                    rows: *rows,
                    cols: *cols,
                    excised: (*excised).max(k),
                }
            }
            other => other.clone(),
        },
        branch_sets: BTreeMap::new(),
        branch_paths: BTreeMap::new(),
    };
    for (pv, s) in &m.branch_sets {
        if element_in_corner_submodel(&m.pattern, &ElementId::Vertex(*pv), k)? {
            out.branch_sets.insert(*pv, s.clone());
        }
    }
    for (pe, p) in &m.branch_paths {
        if element_in_corner_submodel(&m.pattern, &ElementId::Edge(*pe), k)? {
            out.branch_paths.insert(*pe, p.clone());
        }
    }
    if let PatternDescriptor::Explicit { names, edges } = &m.pattern {
        // rebuild the explicit pattern on the surviving vertices, renumbered
        let mut remap: BTreeMap<u32, u32> = BTreeMap::new();
        let mut kept_names = Vec::new();
        for i in 0..names.len() as u32 {
            if out.branch_sets.contains_key(&PatternVertex(0, i)) {
                remap.insert(i, kept_names.len() as u32);
                kept_names.push(names[i as usize].clone());
            }
        }
        let kept_edges: Vec<(u32, u32)> = edges
            .iter()
            .filter(|(a, b)| {
                out.branch_paths
                    .contains_key(&PatternEdge::new(PatternVertex(0, *a), PatternVertex(0, *b)))
            })
            .map(|(a, b)| (remap[a], remap[b]))
            .collect();
        out.branch_sets = out
            .branch_sets
            .into_iter()
            .map(|(pv, s)| (PatternVertex(0, remap[&pv.1]), s))
            .collect();
        out.branch_paths = out
            .branch_paths
            .into_iter()
            .map(|(pe, p)| {
                (
                    PatternEdge::new(
                        PatternVertex(0, remap[&pe.0 .1]),
                        PatternVertex(0, remap[&pe.1 .1]),
                    ),
                    p,
                )
            })
            .collect();
        out.pattern = PatternDescriptor::Explicit { names: kept_names, edges: kept_edges };
    }
    Ok(out)
}

/// For each K <= kmax, the fatness verdict of the corner submodel at level K.
/// Row 0 is plain validity.
pub fn ultrafat_table(g: &GraphHandle, m: &MinorModel, kmax: u32) -> Result<UltraFatTable> {
    if !m.pattern.is_halfgrid_like() {
        return Err(Error::WrongPattern(format!("{:?}", m.pattern)));
    }
    let validity = validate_model(g, m);
    if let Some(v) = validity.indeterminate {
        return Err(Error::IndeterminateModel(v));
    }
    if !validity.valid {
        let v = validity.violation.unwrap();
        return Err(Error::InvalidModel { clause: v.clause, detail: v.detail });
    }
    let matrix = distance_matrix(g, m, ExecMode::default_mode())?;
    let mut rows = Vec::new();
    for k in 0..=kmax {
        let include: Vec<bool> = matrix
            .elements
            .iter()
            .map(|e| element_in_corner_submodel(&m.pattern, e, k))
            .collect::<Result<_>>()?;
        let (min_observed, _value_exact, pair) = fatness_over(&matrix, &include);
        let pass = match min_observed {
            None => true, // empty or unconstrained submodel
            Some(d) => d >= k,
        };
        let exact = decided_at(&matrix, &include, k);
        rows.push(UltraRow {
            k,
            pass,
            min_observed,
            exact,
            witness: pair.filter(|(_, _, d)| *d < k).map(|(i, j, d)| {
                (
                    matrix.elements[i].label(&m.pattern),
                    matrix.elements[j].label(&m.pattern),
                    d,
                )
            }),
        });
    }
    Ok(UltraFatTable { rows })
}

/// Fatness of every column strip (pattern vertices with n >= level), used as
/// the graded precondition of the re-gridding step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradedReport {
    pub rows: Vec<(u32, Option<u32>, bool)>, // (level, min observed, pass)
}

pub fn graded_strip_check(
    g: &GraphHandle,
    m: &MinorModel,
    schedule: &[u32],
) -> Result<GradedReport> {
    if !m.pattern.is_halfgrid_like() {
        return Err(Error::WrongPattern(format!("{:?}", m.pattern)));
    }
    let matrix = distance_matrix(g, m, ExecMode::default_mode())?;
    let coords = |v: PatternVertex| m.pattern.grid_coords(v).unwrap();
    let mut rows = Vec::new();
    for (level, &req) in schedule.iter().enumerate() {
        let level = level as u32;
        let include: Vec<bool> = matrix
            .elements
            .iter()
            .map(|e| match e {
                ElementId::Vertex(v) => coords(*v).0 >= level,
                ElementId::Edge(pe) => coords(pe.0).0 >= level && coords(pe.1).0 >= level,
            })
            .collect();
        let (min_observed, _exact, _) = fatness_over(&matrix, &include);
        let pass = min_observed.map(|d| d >= req).unwrap_or(true);
        rows.push((level, min_observed, pass));
        if !pass {
            return Err(Error::GradedFatnessMissing { level, measured: min_observed, required: req });
        }
    }
    Ok(GradedReport { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    DivergingSample,
    NonDivergingSample,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeRow {
    pub a: String,
    pub b: String,
    pub pattern_dist: u32,
    pub ambient_lower: u32,
    pub ambient_window: Option<u32>,
    pub exact: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeTable {
    pub rows: Vec<ProbeRow>,
    pub trend: Trend,
    /// Recorded explicitly: the divergence surrogate only applies to models
    /// with finite branch sets, which is always true at this scale.
    pub branch_sets_finite: bool,
}

fn pattern_element_distance(pattern: &PatternDescriptor, a: &ElementId, b: &ElementId) -> u32 {
    // distance in the pattern graph; for edges take the min over endpoints
    let verts = pattern.vertices();
    let pos: BTreeMap<PatternVertex, usize> = verts.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut adj = vec![Vec::new(); verts.len()];
    for e in pattern.edges() {
        let i = pos[&e.0];
        let j = pos[&e.1];
        adj[i].push(j);
        adj[j].push(i);
    }
    let sources: Vec<usize> = match a {
        ElementId::Vertex(v) => vec![pos[v]],
        ElementId::Edge(e) => vec![pos[&e.0], pos[&e.1]],
    };
    let targets: Vec<usize> = match b {
        ElementId::Vertex(v) => vec![pos[v]],
        ElementId::Edge(e) => vec![pos[&e.0], pos[&e.1]],
    };
    let mut dist = vec![u32::MAX; verts.len()];
    let mut q = std::collections::VecDeque::new();
    for s in sources {
        dist[s] = 0;
        q.push_back(s);
    }
    while let Some(v) = q.pop_front() {
        for &w in &adj[v] {
            if dist[w] == u32::MAX {
                dist[w] = dist[v] + 1;
                q.push_back(w);
            }
        }
    }
    targets.into_iter().map(|t| dist[t]).min().unwrap_or(u32::MAX)
}

/// Measure (pattern distance, ambient distance) for the requested element
/// pairs and summarize the trend as a finite divergence surrogate.
pub fn divergence_probe(
    g: &GraphHandle,
    m: &MinorModel,
    pairs: &[(ElementId, ElementId)],
) -> Result<ProbeTable> {
    let mut rows = Vec::new();
    for (a, b) in pairs {
        for e in [a, b] {
            let known = match e {
                ElementId::Vertex(v) => m.branch_sets.contains_key(v),
                ElementId::Edge(pe) => m.branch_paths.contains_key(pe),
            };
            if !known {
                return Err(Error::UnknownElement(e.to_string()));
            }
        }
        let av: Vec<VertexId> =
            m.element_vertices(a).verts().into_iter().cloned().collect();
        let bv: Vec<VertexId> =
            m.element_vertices(b).verts().into_iter().cloned().collect();
        let d = if a == b {
            DistanceResult { window_dist: Some(0), lower_bound: 0, exact: true }
        } else {
            g.distance(&av, &bv)?
        };
        rows.push(ProbeRow {
            a: a.to_string(),
            b: b.to_string(),
            pattern_dist: pattern_element_distance(&m.pattern, a, b),
            ambient_lower: d.lower_bound.min(d.window_dist.unwrap_or(u32::MAX)),
            ambient_window: d.window_dist,
            exact: d.exact,
        });
    }
    let mut sorted: Vec<&ProbeRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.pattern_dist);
    let vals: Vec<u32> = sorted.iter().map(|r| r.ambient_lower).collect();
    let nondecreasing = vals.windows(2).all(|w| w[0] <= w[1]);
    let grows = vals.last().copied().unwrap_or(0) > vals.first().copied().unwrap_or(0);
    let trend = if nondecreasing && grows {
        Trend::DivergingSample
    } else {
        Trend::NonDivergingSample
    };
    Ok(ProbeTable { rows, trend, branch_sets_finite: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::GeneratorSpec;
    use crate::graph::Window;

    fn singleton(v: VertexId) -> BTreeSet<VertexId> {
        let mut s = BTreeSet::new();
        s.insert(v);
        s
    }

    fn path3_graph() -> GraphHandle {
        let a = VertexId::Named("a".into());
        let b = VertexId::Named("b".into());
        let c = VertexId::Named("c".into());
        GraphHandle::instantiate(
            GeneratorSpec::explicit(&[(a.clone(), b.clone()), (b, c)]),
            Window { basepoint: VertexId::Named("a".into()), radius: 10 },
        )
        .unwrap()
    }

    fn identity_p3_model() -> MinorModel {
        let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let a = VertexId::Named("a".into());
        let b = VertexId::Named("b".into());
        let c = VertexId::Named("c".into());
        let mut branch_sets = BTreeMap::new();
        branch_sets.insert(PatternVertex(0, 0), singleton(a.clone()));
        branch_sets.insert(PatternVertex(0, 1), singleton(b.clone()));
        branch_sets.insert(PatternVertex(0, 2), singleton(c.clone()));
        let mut branch_paths = BTreeMap::new();
        branch_paths.insert(
            PatternEdge::new(PatternVertex(0, 0), PatternVertex(0, 1)),
            vec![a, b.clone()],
        );
        branch_paths.insert(
            PatternEdge::new(PatternVertex(0, 1), PatternVertex(0, 2)),
            vec![b, c],
        );
        MinorModel {
            pattern: PatternDescriptor::Explicit { names, edges: vec![(0, 1), (1, 2)] },
            branch_sets,
            branch_paths,
        }
    }

    #[test]
    fn identity_model_valid() {
        let g = path3_graph();
        let m = identity_p3_model();
        let rep = validate_model(&g, &m);
        assert!(rep.valid, "{:?}", rep);
        // The two branch paths share vertex b. Path-path pairs are never
        // exempt, so that pair pins the achieved fatness to 0.
        let f = fatness(&g, &m).unwrap();
        assert_eq!(f.achieved, Some(0));
        assert!(f.exact);
        let (a, b, d) = f.violating_pair.unwrap();
        assert_eq!(d, 0);
        assert!(a.starts_with("E(") && b.starts_with("E("));
    }

    #[test]
    fn spread_paths_reach_fatness_1() {
        // On a longer host path, a model whose branch paths do not touch
        // achieves fatness 1: sets {a},{c},{e}, paths [a,b,c] and [d,e].
        let toks: Vec<VertexId> = ["a", "b", "c", "d", "e"]
            .iter()
            .map(|s| VertexId::Named(s.to_string()))
            .collect();
        let edges: Vec<(VertexId, VertexId)> =
            toks.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
        let g = GraphHandle::instantiate(
            GeneratorSpec::explicit(&edges),
            Window { basepoint: toks[0].clone(), radius: 10 },
        )
        .unwrap();
        let mut branch_sets = BTreeMap::new();
        branch_sets.insert(PatternVertex(0, 0), singleton(toks[0].clone()));
        branch_sets.insert(PatternVertex(0, 1), singleton(toks[2].clone()));
        branch_sets.insert(PatternVertex(0, 2), singleton(toks[4].clone()));
        let mut branch_paths = BTreeMap::new();
        branch_paths.insert(
            PatternEdge::new(PatternVertex(0, 0), PatternVertex(0, 1)),
            vec![toks[0].clone(), toks[1].clone(), toks[2].clone()],
        );
        branch_paths.insert(
            PatternEdge::new(PatternVertex(0, 1), PatternVertex(0, 2)),
            vec![toks[3].clone(), toks[4].clone()],
        );
        let m = MinorModel {
            pattern: PatternDescriptor::Explicit {
                names: vec!["x".into(), "y".into(), "z".into()],
                edges: vec![(0, 1), (1, 2)],
            },
            branch_sets,
            branch_paths,
        };
        // second path starts outside V_y: invalid endpoints
        let rep = validate_model(&g, &m);
        assert!(!rep.valid);
        assert_eq!(rep.violation.unwrap().clause, "endpoints");
    }

    #[test]
    fn overlapping_sets_rejected() {
        let g = path3_graph();
        let mut m = identity_p3_model();
        m.branch_sets
            .get_mut(&PatternVertex(0, 0))
            .unwrap()
            .insert(VertexId::Named("b".into()));
        let rep = validate_model(&g, &m);
        assert!(!rep.valid);
        assert_eq!(rep.violation.unwrap().clause, "disjoint");
    }

    #[test]
    fn edgeless_singletons_fatness() {
        let g = GraphHandle::instantiate(
            GeneratorSpec::Grid2d,
            Window { basepoint: VertexId::pair(0, 0), radius: 8 },
        )
        .unwrap();
        let mut branch_sets = BTreeMap::new();
        branch_sets.insert(PatternVertex(0, 0), singleton(VertexId::pair(0, 0)));
        branch_sets.insert(PatternVertex(0, 1), singleton(VertexId::pair(0, 5)));
        let m = MinorModel {
            pattern: PatternDescriptor::Explicit {
                names: vec!["0,0".into(), "0,1".into()],
                edges: vec![],
            },
            branch_sets,
            branch_paths: BTreeMap::new(),
        };
        assert_eq!(fatness(&g, &m).unwrap().achieved, Some(5));
    }

    #[test]
    fn submodel_corner_arithmetic() {
        // 4x4 portion, K=4: empty vertex set
        let m4 = PatternDescriptor::HalfgridPortion { rows: 4, cols: 4, excised: 4 };
        assert!(m4.vertices().is_empty());
        let m2 = PatternDescriptor::HalfgridPortion { rows: 4, cols: 4, excised: 2 };
        assert_eq!(m2.vertices().len(), 12);
    }

    #[test]
    fn pattern_edges_match_edge_rule() {
        // induced edges of the excised portion coincide with the literal
        // submodel edge rule (kept iff n,n' >= K or m,m' >= K)
        for k in 0..4u32 {
            let p = PatternDescriptor::HalfgridPortion { rows: 5, cols: 5, excised: k };
            for e in p.edges() {
                let (n1, m1) = (e.0 .0, e.0 .1);
                let (n2, m2) = (e.1 .0, e.1 .1);
                assert!((n1 >= k && n2 >= k) || (m1 >= k && m2 >= k));
            }
        }
    }
}

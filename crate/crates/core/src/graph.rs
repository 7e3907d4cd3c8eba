//! Windowed materialization of a lazily generated graph, plus the exact
//! distance / ball / component primitives everything else is built on.
//!
//! A window is the graph-distance ball of a given radius around a basepoint.
//! Results carry an exactness flag: a measurement is exact when no path
//! leaving the window could change it, so enlarging the window never changes
//! a result that was already certified exact.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::generators::GeneratorSpec;
use crate::vertex::VertexId;

pub const UNREACHED: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub basepoint: VertexId,
    pub radius: u32,
}

/// Exactness-aware distance between two vertex sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DistanceResult {
    /// Shortest path found inside the window, if any. Always an upper bound
    /// on the true distance.
    pub window_dist: Option<u32>,
    /// Proven lower bound on the true distance.
    pub lower_bound: u32,
    /// True when lower and upper bound agree (or unreachability is sealed).
    pub exact: bool,
}

impl DistanceResult {
    pub fn exact_value(&self) -> Option<u32> {
        if self.exact {
            Some(self.window_dist.unwrap_or(UNREACHED))
        } else {
            None
        }
    }

    /// True distance is provably >= k.
    pub fn at_least(&self, k: u32) -> bool {
        self.lower_bound >= k || self.window_dist.is_none() && self.exact
    }

    /// True distance is provably < k (a real path shorter than k exists).
    pub fn less_than(&self, k: u32) -> bool {
        self.window_dist.map(|d| d < k).unwrap_or(false)
    }
}

#[derive(Debug, Clone)]
pub struct BallResult {
    pub vertices: Vec<VertexId>,
    pub exact: bool,
}

#[derive(Debug, Clone)]
pub struct Component {
    pub vertices: Vec<VertexId>,
    /// Vertices of the component adjacent to the forbidden set.
    pub contacts: Vec<VertexId>,
    pub touches_horizon: bool,
}

struct DistCache {
    map: HashMap<Vec<u32>, Arc<Vec<u32>>>,
    order: VecDeque<Vec<u32>>,
    bytes: usize,
    limit: usize,
}

impl DistCache {
    fn new(limit: usize) -> Self {
        DistCache { map: HashMap::new(), order: VecDeque::new(), bytes: 0, limit }
    }

    fn get(&self, key: &[u32]) -> Option<Arc<Vec<u32>>> {
        self.map.get(key).cloned()
    }

    fn put(&mut self, key: Vec<u32>, value: Arc<Vec<u32>>) {
        let cost = 4 * (key.len() + value.len());
        if cost > self.limit {
            return;
        }
        while self.bytes + cost > self.limit {
            match self.order.pop_front() {
                Some(old) => {
                    if let Some(v) = self.map.remove(&old) {
                        self.bytes -= 4 * (old.len() + v.len());
                    }
                }
                None => break,
            }
        }
        self.bytes += cost;
        self.order.push_back(key.clone());
        self.map.insert(key, value);
    }
}

fn cache_limit_from_env() -> usize {
    std::env::var("COARSEGRID_CACHE_LIMIT")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .unwrap_or(64 << 20)
}

/// A materialized window of a lazily generated graph. Construction is the
/// only mutation; all queries take `&self` and are safe to run concurrently.
pub struct GraphHandle {
    spec: GeneratorSpec,
    window: Window,
    verts: Vec<VertexId>,
    index: HashMap<VertexId, u32>,
    adj_off: Vec<u32>,
    adj: Vec<u32>,
    dist_base: Vec<u32>,
    cache: Mutex<DistCache>,
}

impl std::fmt::Debug for GraphHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GraphHandle")
            .field("spec", &self.spec.name())
            .field("window", &self.window)
            .field("vertices", &self.verts.len())
            .finish()
    }
}

impl GraphHandle {
    pub fn instantiate(spec: GeneratorSpec, window: Window) -> Result<GraphHandle> {
        let basepoint = spec.canonicalize(&window.basepoint);
        if !spec.contains(&basepoint) {
            return Err(Error::OutsideWindow(basepoint.token()));
        }
        let window = Window { basepoint: basepoint.clone(), radius: window.radius };

        // BFS over the generator's neighbor oracle out to the radius.
        let mut dist: HashMap<VertexId, u32> = HashMap::new();
        let mut queue = VecDeque::new();
        dist.insert(basepoint.clone(), 0);
        queue.push_back(basepoint);
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            if d == window.radius {
                continue;
            }
            for w in spec.neighbors(&v) {
                let w = spec.canonicalize(&w);
                if !dist.contains_key(&w) {
                    dist.insert(w.clone(), d + 1);
                    queue.push_back(w);
                }
            }
        }

        let mut verts: Vec<VertexId> = dist.keys().cloned().collect();
        verts.sort();
        let index: HashMap<VertexId, u32> =
            verts.iter().enumerate().map(|(i, v)| (v.clone(), i as u32)).collect();
        let dist_base: Vec<u32> = verts.iter().map(|v| dist[v]).collect();

        let mut adj_off = Vec::with_capacity(verts.len() + 1);
        let mut adj = Vec::new();
        adj_off.push(0u32);
        for v in &verts {
            let mut row: Vec<u32> = spec
                .neighbors(v)
                .into_iter()
                .filter_map(|w| index.get(&spec.canonicalize(&w)).copied())
                .collect();
            row.sort_unstable();
            row.dedup();
            adj.extend_from_slice(&row);
            adj_off.push(adj.len() as u32);
        }

        Ok(GraphHandle {
            spec,
            window,
            verts,
            index,
            adj_off,
            adj,
            dist_base,
            cache: Mutex::new(DistCache::new(cache_limit_from_env())),
        })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn radius(&self) -> u32 {
        self.window.radius
    }

    pub fn vertex_count(&self) -> usize {
        self.verts.len()
    }

    pub fn contains(&self, v: &VertexId) -> bool {
        self.index.contains_key(&self.spec.canonicalize(v))
    }

    pub fn idx(&self, v: &VertexId) -> Option<u32> {
        self.index.get(&self.spec.canonicalize(v)).copied()
    }

    pub fn require_idx(&self, v: &VertexId) -> Result<u32> {
        self.idx(v).ok_or_else(|| Error::OutsideWindow(v.token()))
    }

    pub fn vid(&self, i: u32) -> &VertexId {
        &self.verts[i as usize]
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.verts
    }

    pub fn adj_row(&self, i: u32) -> &[u32] {
        let a = self.adj_off[i as usize] as usize;
        let b = self.adj_off[i as usize + 1] as usize;
        &self.adj[a..b]
    }

    pub fn dist_base(&self, i: u32) -> u32 {
        self.dist_base[i as usize]
    }

    /// Whole generator-neighborhood of `v` is inside the window.
    pub fn has_full_horizon(&self, v: &VertexId) -> Result<bool> {
        let i = self.require_idx(v)?;
        Ok(self.dist_base[i as usize] < self.window.radius)
    }

    pub fn neighbors(&self, v: &VertexId) -> Result<Vec<VertexId>> {
        let i = self.require_idx(v)?;
        Ok(self.adj_row(i).iter().map(|&j| self.verts[j as usize].clone()).collect())
    }

    fn resolve_set(&self, set: &[VertexId], op: &'static str) -> Result<Vec<u32>> {
        if set.is_empty() {
            return Err(Error::EmptySet(op));
        }
        let mut out = Vec::with_capacity(set.len());
        for v in set {
            out.push(self.require_idx(v)?);
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Plain multi-source BFS field over the whole window. Not cached.
    pub fn bfs_field(&self, sources: &[u32]) -> Vec<u32> {
        let mut dist = vec![UNREACHED; self.verts.len()];
        let mut queue = VecDeque::with_capacity(sources.len());
        for &s in sources {
            if dist[s as usize] == UNREACHED {
                dist[s as usize] = 0;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            let d = dist[v as usize];
            for &w in self.adj_row(v) {
                if dist[w as usize] == UNREACHED {
                    dist[w as usize] = d + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Cached variant keyed by the (sorted) source set.
    pub fn bfs_field_cached(&self, sources: &[u32]) -> Arc<Vec<u32>> {
        let key: Vec<u32> = sources.to_vec();
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return hit;
        }
        let field = Arc::new(self.bfs_field(sources));
        self.cache.lock().unwrap().put(key, field.clone());
        field
    }

    /// Multi-source BFS truncated at `depth`; returns (vertex, dist) pairs
    /// sorted by vertex index.
    pub fn bounded_ball_idx(&self, sources: &[u32], depth: u32) -> Vec<(u32, u32)> {
        let mut dist: HashMap<u32, u32> = HashMap::new();
        let mut queue = VecDeque::new();
        for &s in sources {
            if !dist.contains_key(&s) {
                dist.insert(s, 0);
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            if d == depth {
                continue;
            }
            for &w in self.adj_row(v) {
                dist.entry(w).or_insert_with(|| {
                    queue.push_back(w);
                    d + 1
                });
            }
        }
        let mut out: Vec<(u32, u32)> = dist.into_iter().collect();
        out.sort_unstable();
        out
    }

    /// Bounded multi-source BFS as an index -> distance map.
    pub fn bounded_ball_map(&self, sources: &[u32], depth: u32) -> HashMap<u32, u32> {
        self.bounded_ball_idx(sources, depth).into_iter().collect()
    }

    fn max_dist_base(&self, set: &[u32]) -> u32 {
        set.iter().map(|&i| self.dist_base[i as usize]).max().unwrap_or(0)
    }

    /// Lower bound on the length of any path between the sets that leaves the
    /// window: it must first reach past the horizon from each side.
    fn escape_bound(&self, a: &[u32], b: &[u32]) -> u32 {
        let r = self.window.radius + 1;
        r.saturating_sub(self.max_dist_base(a)) + r.saturating_sub(self.max_dist_base(b))
    }

    pub fn dist_idx(&self, a: &[u32], b: &[u32]) -> DistanceResult {
        let field = self.bfs_field(a);
        let mut wd = UNREACHED;
        for &t in b {
            wd = wd.min(field[t as usize]);
        }
        // Did the search reach the horizon at all? If not, the component of A
        // is sealed inside the window and results are exact even if infinite.
        let sealed = !field
            .iter()
            .enumerate()
            .any(|(i, &d)| d != UNREACHED && self.dist_base[i] == self.window.radius);
        let escape = self.escape_bound(a, b);
        if wd != UNREACHED {
            if wd <= escape {
                DistanceResult { window_dist: Some(wd), lower_bound: wd, exact: true }
            } else {
                DistanceResult { window_dist: Some(wd), lower_bound: escape, exact: false }
            }
        } else if sealed {
            DistanceResult { window_dist: None, lower_bound: UNREACHED, exact: true }
        } else {
            DistanceResult { window_dist: None, lower_bound: escape, exact: false }
        }
    }

    /// Exact minimum distance between two vertex sets within the window.
    pub fn distance(&self, a: &[VertexId], b: &[VertexId]) -> Result<DistanceResult> {
        let a = self.resolve_set(a, "distance")?;
        let b = self.resolve_set(b, "distance")?;
        Ok(self.dist_idx(&a, &b))
    }

    pub fn ball_idx(&self, a: &[u32], r: u32) -> (Vec<u32>, bool) {
        let exact = self.max_dist_base(a) + r <= self.window.radius;
        let mut out: Vec<u32> =
            self.bounded_ball_idx(a, r).into_iter().map(|(v, _)| v).collect();
        out.sort_unstable();
        (out, exact)
    }

    /// B(A, r) within the window; flagged `exact: false` when truncated.
    pub fn ball(&self, a: &[VertexId], r: u32) -> Result<BallResult> {
        let a = self.resolve_set(a, "ball")?;
        let (idxs, exact) = self.ball_idx(&a, r);
        Ok(BallResult {
            vertices: idxs.into_iter().map(|i| self.verts[i as usize].clone()).collect(),
            exact,
        })
    }

    /// Connected components of the window minus `forbidden`, each with its
    /// boundary contacts. Components are ordered by their least vertex.
    pub fn components_avoiding(&self, forbidden: &[VertexId]) -> Result<Vec<Component>> {
        let mut forb = vec![false; self.verts.len()];
        for v in forbidden {
            forb[self.require_idx(v)? as usize] = true;
        }
        Ok(self
            .components_avoiding_idx(&forb)
            .into_iter()
            .map(|(vs, contacts, horizon)| Component {
                vertices: vs.into_iter().map(|i| self.verts[i as usize].clone()).collect(),
                contacts: contacts.into_iter().map(|i| self.verts[i as usize].clone()).collect(),
                touches_horizon: horizon,
            })
            .collect())
    }

    pub fn components_avoiding_idx(&self, forb: &[bool]) -> Vec<(Vec<u32>, Vec<u32>, bool)> {
        let n = self.verts.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n as u32 {
            if seen[start as usize] || forb[start as usize] {
                continue;
            }
            let mut comp = Vec::new();
            let mut contacts = Vec::new();
            let mut horizon = false;
            let mut queue = VecDeque::new();
            seen[start as usize] = true;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                comp.push(v);
                if self.dist_base[v as usize] == self.window.radius {
                    horizon = true;
                }
                let mut is_contact = false;
                for &w in self.adj_row(v) {
                    if forb[w as usize] {
                        is_contact = true;
                    } else if !seen[w as usize] {
                        seen[w as usize] = true;
                        queue.push_back(w);
                    }
                }
                if is_contact {
                    contacts.push(v);
                }
            }
            comp.sort_unstable();
            contacts.sort_unstable();
            out.push((comp, contacts, horizon));
        }
        out
    }

    /// Source-side lexicographically least shortest path from `a` to `b`
    /// avoiding `forbidden`, as window indices. Prefers, among all shortest
    /// paths, the one whose start minimizes `start_key`.
    pub fn shortest_path_avoiding<F: Fn(u32) -> u64>(
        &self,
        a: &[u32],
        b: &[u32],
        forbidden: &[bool],
        start_key: F,
    ) -> Option<Vec<u32>> {
        // BFS distances toward the target set, then walk greedily from the
        // chosen start downhill, taking the least-index neighbor each step.
        let n = self.verts.len();
        let mut dist = vec![UNREACHED; n];
        let mut queue = VecDeque::new();
        for &t in b {
            if forbidden[t as usize] {
                continue;
            }
            if dist[t as usize] == UNREACHED {
                dist[t as usize] = 0;
                queue.push_back(t);
            }
        }
        while let Some(v) = queue.pop_front() {
            let d = dist[v as usize];
            for &w in self.adj_row(v) {
                if !forbidden[w as usize] && dist[w as usize] == UNREACHED {
                    dist[w as usize] = d + 1;
                    queue.push_back(w);
                }
            }
        }
        let mut best: Option<(u32, u64, u32)> = None; // (dist, key, start)
        for &s in a {
            if forbidden[s as usize] || dist[s as usize] == UNREACHED {
                continue;
            }
            let cand = (dist[s as usize], start_key(s), s);
            if best.map(|b| cand < b).unwrap_or(true) {
                best = Some(cand);
            }
        }
        let (_, _, start) = best?;
        let mut path = vec![start];
        let mut cur = start;
        while dist[cur as usize] > 0 {
            let next = self
                .adj_row(cur)
                .iter()
                .copied()
                .filter(|&w| !forbidden[w as usize] && dist[w as usize] + 1 == dist[cur as usize])
                .min()
                .expect("bfs invariant");
            path.push(next);
            cur = next;
        }
        Some(path)
    }

    /// Forward-lexicographic least geodesic between two vertices (used for
    /// corridor construction). Length equals the exact window distance.
    pub fn lex_geodesic(&self, from: u32, to: u32) -> Option<Vec<u32>> {
        let forbidden = vec![false; self.verts.len()];
        self.shortest_path_avoiding(&[from], &[to], &forbidden, |_| 0)
    }

    pub fn level_set(&self, n: u64) -> Option<Vec<VertexId>> {
        self.spec.level_set(n).map(|vs| {
            vs.into_iter().filter(|v| self.contains(v)).collect()
        })
    }

    pub fn tokens(&self, idxs: &[u32]) -> Vec<VertexId> {
        idxs.iter().map(|&i| self.verts[i as usize].clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(radius: u32) -> GraphHandle {
        GraphHandle::instantiate(
            GeneratorSpec::Grid2d,
            Window { basepoint: VertexId::pair(0, 0), radius },
        )
        .unwrap()
    }

    #[test]
    fn grid_window_size() {
        // |{|x|+|y| <= 3}| = 2*3^2 + 2*3 + 1 = 25
        assert_eq!(grid(3).vertex_count(), 25);
    }

    #[test]
    fn grid_distance_taxicab() {
        let g = grid(8);
        let d = g
            .distance(&[VertexId::pair(0, 0)], &[VertexId::pair(2, 3)])
            .unwrap();
        assert_eq!(d.exact_value(), Some(5));
    }

    #[test]
    fn ball_counts() {
        let g = grid(6);
        let b = g.ball(&[VertexId::pair(0, 0)], 2).unwrap();
        assert!(b.exact);
        assert_eq!(b.vertices.len(), 13);
        let b0 = g.ball(&[VertexId::pair(1, 1)], 0).unwrap();
        assert_eq!(b0.vertices, vec![VertexId::pair(1, 1)]);
    }

    #[test]
    fn truncated_ball_flagged() {
        let g = grid(3);
        let b = g.ball(&[VertexId::pair(2, 0)], 2).unwrap();
        assert!(!b.exact);
    }

    #[test]
    fn axis_strip_splits_grid() {
        let g = grid(6);
        let axis: Vec<VertexId> = (-6..=6).map(|x| VertexId::pair(x, 0)).collect();
        let strip = g.ball(&axis, 1).unwrap();
        let comps = g.components_avoiding(&strip.vertices).unwrap();
        assert_eq!(comps.len(), 2);
        let comps0 = g.components_avoiding(&[]).unwrap();
        assert_eq!(comps0.len(), 1);
    }

    #[test]
    fn inexact_distance_near_horizon() {
        // Two vertices on the horizon: a path outside the window could be
        // shorter than anything the window shows.
        let g = grid(3);
        let d = g
            .distance(&[VertexId::pair(3, 0)], &[VertexId::pair(0, 3)])
            .unwrap();
        assert_eq!(d.window_dist, Some(6));
        assert!(!d.exact);
        assert!(d.lower_bound <= 2);
    }

    #[test]
    fn outside_window_rejected() {
        let g = grid(3);
        assert!(matches!(
            g.distance(&[VertexId::pair(9, 9)], &[VertexId::pair(0, 0)]),
            Err(Error::OutsideWindow(_))
        ));
        assert!(matches!(g.distance(&[], &[VertexId::pair(0, 0)]), Err(Error::EmptySet(_))));
    }

    #[test]
    fn sealed_unreachable_is_exact() {
        let spec = GeneratorSpec::explicit(&[
            (VertexId::Named("a".into()), VertexId::Named("b".into())),
            (VertexId::Named("c".into()), VertexId::Named("d".into())),
        ]);
        // window around `a` of radius 10 covers its whole component
        let g = GraphHandle::instantiate(
            spec,
            Window { basepoint: VertexId::Named("a".into()), radius: 10 },
        )
        .unwrap();
        assert!(!g.contains(&VertexId::Named("c".into())));
    }
}

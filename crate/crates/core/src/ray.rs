//! Rays and double rays: geodesic construction, fat-ray certificates,
//! segmentation into ray models, coarse-embedding profiles, and invariant
//! double rays under a declared non-elliptic automorphism.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{Automorphism, AutomorphismKind};
use crate::graph::{GraphHandle, UNREACHED};
use crate::model::{MinorModel, PatternDescriptor, PatternEdge, PatternVertex};
use crate::vertex::VertexId;

/// Periodic extension rule: applying `automorphism^power` to the segment
/// starting at `start` of length `period` reproduces the next segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RayExtension {
    pub automorphism: String,
    pub power: i64,
    pub start: usize,
    pub period: usize,
}

/// Ordered vertex path: a materialized finite prefix plus an optional
/// periodic extension rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ray {
    pub prefix: Vec<VertexId>,
    pub extension: Option<RayExtension>,
}

impl Ray {
    pub fn finite(prefix: Vec<VertexId>) -> Ray {
        Ray { prefix, extension: None }
    }

    pub fn tail(&self, from: usize) -> Ray {
        Ray { prefix: self.prefix[from.min(self.prefix.len())..].to_vec(), extension: None }
    }

    /// Window indices of the prefix; checks adjacency and simplicity.
    pub fn materialize(&self, g: &GraphHandle) -> Result<Vec<u32>> {
        if self.prefix.is_empty() {
            return Err(Error::RayNotMaterialized("empty prefix".into()));
        }
        let mut idxs = Vec::with_capacity(self.prefix.len());
        let mut seen = BTreeSet::new();
        for v in &self.prefix {
            let i = g.require_idx(v)?;
            if !seen.insert(i) {
                return Err(Error::RayNotMaterialized(format!("vertex {v} repeats")));
            }
            idxs.push(i);
        }
        for w in idxs.windows(2) {
            if !g.adj_row(w[0]).contains(&w[1]) {
                return Err(Error::RayNotMaterialized(format!(
                    "{} and {} are not adjacent",
                    g.vid(w[0]),
                    g.vid(w[1])
                )));
            }
        }
        Ok(idxs)
    }
}

/// Two one-way prefixes sharing their origin, materialized as a single
/// two-way path `..., neg[1], neg[0], origin, pos[0], pos[1], ...`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoubleRay {
    pub origin: VertexId,
    pub pos: Vec<VertexId>,
    pub neg: Vec<VertexId>,
}

impl DoubleRay {
    pub fn vertices(&self) -> Vec<VertexId> {
        let mut out = Vec::with_capacity(self.pos.len() + self.neg.len() + 1);
        out.extend(self.neg.iter().rev().cloned());
        out.push(self.origin.clone());
        out.extend(self.pos.iter().cloned());
        out
    }

    pub fn materialize(&self, g: &GraphHandle) -> Result<Vec<u32>> {
        Ray::finite(self.vertices()).materialize(g)
    }

    /// The positive-direction ray starting at the origin.
    pub fn forward_ray(&self) -> Ray {
        let mut prefix = vec![self.origin.clone()];
        prefix.extend(self.pos.iter().cloned());
        Ray::finite(prefix)
    }
}

/// Survivability: vertices from which the BFS level structure extends all
/// the way to the window horizon through strictly increasing levels.
fn survivable_mask(g: &GraphHandle, dist: &[u32]) -> Vec<bool> {
    let n = dist.len();
    let mut surv = vec![false; n];
    let mut order: Vec<u32> = (0..n as u32).filter(|&i| dist[i as usize] != UNREACHED).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(dist[i as usize]));
    let horizon = g.radius();
    for &i in &order {
        if dist[i as usize] == horizon {
            surv[i as usize] = true;
            continue;
        }
        surv[i as usize] = g
            .adj_row(i)
            .iter()
            .any(|&w| dist[w as usize] == dist[i as usize] + 1 && surv[w as usize]);
    }
    surv
}

/// Greedy geodesic ray from `base`: always take the least geodesic extension
/// that still survives to the window horizon, then verify full pairwise
/// geodesy on the materialized prefix.
pub fn geodesic_ray(g: &GraphHandle, base: &VertexId) -> Result<Ray> {
    let b = g.require_idx(base)?;
    let dist = g.bfs_field(&[b]);
    let surv = survivable_mask(g, &dist);
    if !surv[b as usize] {
        return Err(Error::NoInfiniteExtension(0));
    }
    let mut idxs = vec![b];
    let mut cur = b;
    while dist[cur as usize] < g.radius() {
        let next = g
            .adj_row(cur)
            .iter()
            .copied()
            .filter(|&w| dist[w as usize] == dist[cur as usize] + 1 && surv[w as usize])
            .min();
        match next {
            Some(w) => {
                idxs.push(w);
                cur = w;
            }
            None => return Err(Error::NoInfiniteExtension(idxs.len())),
        }
    }
    // pairwise geodesy check: d_R(u, v) = d_G(u, v) for all prefix pairs
    for (i, &u) in idxs.iter().enumerate() {
        let field = g.bounded_ball_map(&[u], (idxs.len() - i) as u32);
        for (j, &v) in idxs.iter().enumerate().skip(i + 1) {
            let want = (j - i) as u32;
            let got = field.get(&v).copied().unwrap_or(UNREACHED);
            if got != want {
                return Err(Error::RayNotMaterialized(format!(
                    "greedy ray is not geodesic: d({}, {}) = {} != {}",
                    g.vid(u),
                    g.vid(v),
                    got,
                    want
                )));
            }
        }
    }
    Ok(Ray::finite(idxs.into_iter().map(|i| g.vid(i).clone()).collect()))
}

/// A cut function witnessing that the ray is K-fat over a finite range.
/// The claim is segment-relative and never extends past the window: for each
/// n in [certified_start, certified_end), cut[n - certified_start] is the
/// least N with d(R_{[start..=n]}, R_{[N..end)}) >= K, all measured exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FatRayCertificate {
    pub k: u32,
    pub certified_start: u32,
    pub certified_end: u32,
    /// cut[t] = N(certified_start + t), as an absolute ray position.
    pub cuts: Vec<u32>,
    /// first certified n for which no N exists inside the certified range
    pub failure: Option<u32>,
}

impl FatRayCertificate {
    pub fn cut(&self, n: u32) -> Option<u32> {
        if n < self.certified_start || n >= self.certified_end {
            return None;
        }
        self.cuts.get((n - self.certified_start) as usize).copied()
    }
}

/// Compute the cut function by bounded balls of radius k-1 around each ray
/// vertex: N(n) is one past the furthest in-range vertex within distance < k
/// of the certified prefix up to n. Positions too close to the window horizon
/// for the balls to be exact are excluded from the certified range.
pub fn fat_ray_certificate(g: &GraphHandle, ray: &Ray, k: u32) -> Result<FatRayCertificate> {
    let idxs = ray.materialize(g)?;
    let len = idxs.len() as u32;
    let pos: HashMap<u32, u32> = idxs.iter().enumerate().map(|(p, &i)| (i, p as u32)).collect();
    if k == 0 {
        return Ok(FatRayCertificate {
            k,
            certified_start: 0,
            certified_end: len,
            cuts: (0..len).map(|n| n + 1).collect(),
            failure: None,
        });
    }
    // maximal contiguous run of positions whose (k-1)-balls are exact
    let headroom =
        |p: u32| g.dist_base(idxs[p as usize]) + (k - 1) <= g.radius();
    let start = (0..len).find(|&p| headroom(p));
    let Some(start) = start else {
        return Ok(FatRayCertificate {
            k,
            certified_start: 0,
            certified_end: 0,
            cuts: vec![],
            failure: Some(0),
        });
    };
    let mut end = start;
    while end < len && headroom(end) {
        end += 1;
    }
    let mut cuts = Vec::with_capacity((end - start) as usize);
    let mut running = start;
    let mut failure = None;
    for p in start..end {
        let mut far = p;
        for (w, _) in g.bounded_ball_idx(&[idxs[p as usize]], k - 1) {
            if let Some(&q) = pos.get(&w) {
                if q >= start && q < end {
                    far = far.max(q);
                }
            }
        }
        running = running.max(far);
        let cut = running + 1;
        if cut >= end && failure.is_none() {
            failure = Some(p);
        }
        cuts.push(cut);
    }
    Ok(FatRayCertificate { k, certified_start: start, certified_end: end, cuts, failure })
}

/// Partition the in-window ray into consecutive blocks, even blocks acting
/// as branch sets and odd blocks as branch paths of a K-fat ray model.
pub fn segment_fat_ray(g: &GraphHandle, ray: &Ray, k: u32) -> Result<MinorModel> {
    let cert = fat_ray_certificate(g, ray, k)?;
    segment_with_certificate(g, std::slice::from_ref(ray), k, &[cert])
}

/// Segment several disjoint rays simultaneously into a model of that many
/// disjoint pattern rays, each K-fat along itself.
pub fn segment_with_certificate(
    g: &GraphHandle,
    rays: &[Ray],
    k: u32,
    certs: &[FatRayCertificate],
) -> Result<MinorModel> {
    // Per ray, alternate branch sets [a, N(a)] and branch paths
    // [N(a), N(N(a))]. The cut function then separates every non-adjacent
    // pair by at least K, including consecutive branch paths across a set.
    let mut per_ray: Vec<(Vec<(u32, u32)>, Vec<u32>)> = Vec::new();
    for (ray, cert) in rays.iter().zip(certs) {
        let idxs = ray.materialize(g)?;
        let usable = cert.certified_end.min(idxs.len() as u32);
        if usable <= cert.certified_start {
            return Err(Error::FatCertificateFailed { k, witness: cert.failure.unwrap_or(0) });
        }
        let cut = |p: u32| cert.cut(p).unwrap_or(p + 1).max(p + 1);
        let mut spans: Vec<(u32, u32)> = Vec::new(); // inclusive set spans
        let mut a = cert.certified_start;
        loop {
            let b = cut(a);
            if b >= usable {
                break;
            }
            spans.push((a, b));
            let next = cut(b);
            if next >= usable {
                break;
            }
            a = next;
        }
        if spans.len() < 2 {
            return Err(Error::FatCertificateFailed { k, witness: cert.failure.unwrap_or(0) });
        }
        per_ray.push((spans, idxs));
    }

    let len = per_ray.iter().map(|(s, _)| s.len()).min().unwrap() as u32;
    let pattern = PatternDescriptor::OmegaRays { count: rays.len() as u32, len };
    let mut branch_sets = BTreeMap::new();
    let mut branch_paths = BTreeMap::new();
    for (r, (spans, idxs)) in per_ray.iter().enumerate() {
        let vid = |p: u32| g.vid(idxs[p as usize]).clone();
        for t in 0..len {
            let (a, b) = spans[t as usize];
            let set: BTreeSet<VertexId> = (a..=b).map(vid).collect();
            branch_sets.insert(PatternVertex(r as u32, t), set);
            if t + 1 < len {
                let (a2, _) = spans[t as usize + 1];
                let path: Vec<VertexId> = (b..=a2).map(vid).collect();
                branch_paths.insert(
                    PatternEdge::new(PatternVertex(r as u32, t), PatternVertex(r as u32, t + 1)),
                    path,
                );
            }
        }
    }
    Ok(MinorModel { pattern, branch_sets, branch_paths })
}

/// Exact K_L table: minimum ambient distance over in-window vertex pairs at
/// path distance L, for L <= lmax.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingProfile {
    pub table: Vec<(u32, u32)>,
}

impl EmbeddingProfile {
    /// Derived lower-bound step function: rho_minus(L) = min_{L' >= L} K_{L'}.
    pub fn rho_minus(&self) -> Vec<(u32, u32)> {
        let mut out = self.table.clone();
        let mut best = u32::MAX;
        for row in out.iter_mut().rev() {
            best = best.min(row.1);
            row.1 = best;
        }
        out
    }
}

pub fn embedding_profile(g: &GraphHandle, path: &[VertexId], lmax: u32) -> Result<EmbeddingProfile> {
    let idxs = Ray::finite(path.to_vec()).materialize(g)?;
    if lmax as usize >= idxs.len() {
        return Err(Error::PremiseViolated(format!(
            "Lmax {} exceeds materialized length {}",
            lmax,
            idxs.len()
        )));
    }
    let mut table = Vec::new();
    for l in 1..=lmax {
        let mut best = u32::MAX;
        for (p, &u) in idxs.iter().enumerate() {
            let q = p + l as usize;
            if q >= idxs.len() {
                break;
            }
            let field = g.bounded_ball_idx(&[u], l);
            for (w, d) in field {
                if w == idxs[q] {
                    best = best.min(d);
                }
            }
        }
        if best == u32::MAX {
            best = l; // bounded search cannot exceed the path distance
        }
        table.push((l, best));
    }
    Ok(EmbeddingProfile { table })
}

/// Minimal-displacement surrogate for the invariant double ray: pick an
/// in-window vertex minimizing d(v, phi(v)), connect it to its image by a
/// least geodesic Q, and roll Q out along the powers of phi. Verifies the
/// result is a simple two-way path and phi-invariant on the window core.
pub fn invariant_double_ray(g: &GraphHandle, phi: &Automorphism) -> Result<(DoubleRay, i64)> {
    match phi.kind {
        AutomorphismKind::NonElliptic => {}
        _ => return Err(Error::NonEllipticNotAllowed(phi.id.clone()).swap_kind()),
    }
    // minimal displacement over the window, ties by canonical order; scan
    // with growing bounded depth so the common small-displacement case is
    // found without any full-window search
    let mut best: Option<u32> = None;
    'depth: for d in 1..=g.radius().max(1) {
        for (i, v) in g.vertices().iter().enumerate() {
            let img = match phi.apply(v, 1) {
                Ok(w) => w,
                Err(_) => continue,
            };
            let Some(j) = g.idx(&img) else { continue };
            if i as u32 == j {
                continue;
            }
            // exactness headroom so the displacement is a true distance
            if g.dist_base(i as u32) + d > g.radius() {
                continue;
            }
            let reached = g
                .bounded_ball_idx(&[i as u32], d)
                .into_iter()
                .any(|(w, dd)| w == j && dd == d);
            if reached {
                best = Some(i as u32);
                break 'depth;
            }
        }
    }
    let v0 = best.ok_or_else(|| Error::ExtractionFailed("no displaced vertex in window".into()))?;
    let img = phi.apply(g.vid(v0), 1)?;
    let w0 = g.require_idx(&img)?;
    let q = g
        .lex_geodesic(v0, w0)
        .ok_or_else(|| Error::ExtractionFailed("image unreachable in window".into()))?;
    let seg: Vec<VertexId> = q.iter().map(|&i| g.vid(i).clone()).collect();

    // roll out both directions while inside the window
    let mut walk: Vec<VertexId> = Vec::new();
    let mut k = 0i64;
    loop {
        // translate seg by phi^k; segment covers [v0 .. phi(v0)), drop last
        let mut piece = Vec::new();
        let mut ok = true;
        for v in &seg[..seg.len() - 1] {
            match phi.apply(v, k) {
                Ok(w) if g.contains(&w) => piece.push(w),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            break;
        }
        walk.extend(piece);
        k += 1;
    }
    let mut kneg = -1i64;
    let mut front: Vec<VertexId> = Vec::new();
    loop {
        let mut piece = Vec::new();
        let mut ok = true;
        for v in &seg[..seg.len() - 1] {
            match phi.apply(v, kneg) {
                Ok(w) if g.contains(&w) => piece.push(w),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            break;
        }
        front.splice(0..0, piece);
        kneg -= 1;
    }
    let mut full = front;
    let origin_offset = full.len();
    full.extend(walk);
    if full.len() < 3 {
        return Err(Error::ExtractionFailed("window too small for a double ray".into()));
    }
    // simplicity and adjacency
    let mut seen = BTreeSet::new();
    for v in &full {
        if !seen.insert(v.clone()) {
            return Err(Error::ExtractionFailed(format!("walk self-intersects at {v}")));
        }
    }
    for w in full.windows(2) {
        let a = g.require_idx(&w[0])?;
        let b = g.require_idx(&w[1])?;
        if !g.adj_row(a).contains(&b) {
            return Err(Error::ExtractionFailed(format!(
                "walk not a path at {}-{}",
                w[0], w[1]
            )));
        }
    }
    let dr = DoubleRay {
        origin: full[origin_offset].clone(),
        pos: full[origin_offset + 1..].to_vec(),
        neg: full[..origin_offset].iter().rev().cloned().collect(),
    };
    // posthoc invariance on the window core: the image of every double-ray
    // vertex that stays in-window must lie on the double ray again
    let vs: BTreeSet<VertexId> = dr.vertices().into_iter().collect();
    for v in &vs {
        if let Ok(w) = phi.apply(v, 1) {
            if g.contains(&w) && g.has_full_horizon(&w).unwrap_or(false) && !vs.contains(&w) {
                return Err(Error::ExtractionFailed(format!(
                    "phi image of {v} leaves the double ray"
                )));
            }
        }
    }
    Ok((dr, 1))
}

impl Error {
    fn swap_kind(self) -> Error {
        // invariant_double_ray wants non-elliptic input; report the right way around
        match self {
            Error::NonEllipticNotAllowed(id) => Error::EllipticNotAllowed(id),
            e => e,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::GeneratorSpec;
    use crate::graph::Window;

    fn grid(radius: u32) -> GraphHandle {
        GraphHandle::instantiate(
            GeneratorSpec::Grid2d,
            Window { basepoint: VertexId::pair(0, 0), radius },
        )
        .unwrap()
    }

    #[test]
    fn grid_geodesic_goes_east() {
        let g = grid(6);
        let r = geodesic_ray(&g, &VertexId::pair(0, 0)).unwrap();
        let toks: Vec<String> = r.prefix.iter().take(4).map(|v| v.token()).collect();
        assert_eq!(toks, vec!["0,0", "1,0", "2,0", "3,0"]);
        assert_eq!(r.prefix.len(), 7);
    }

    #[test]
    fn geodesic_window_extension_stability() {
        let small = geodesic_ray(&grid(5), &VertexId::pair(0, 0)).unwrap();
        let large = geodesic_ray(&grid(9), &VertexId::pair(0, 0)).unwrap();
        assert_eq!(&large.prefix[..small.prefix.len()], &small.prefix[..]);
    }

    #[test]
    fn finite_graph_has_no_ray() {
        let spec = GeneratorSpec::explicit(&[
            (VertexId::Named("a".into()), VertexId::Named("b".into())),
            (VertexId::Named("b".into()), VertexId::Named("c".into())),
        ]);
        let g = GraphHandle::instantiate(
            spec,
            Window { basepoint: VertexId::Named("a".into()), radius: 10 },
        )
        .unwrap();
        assert!(matches!(
            geodesic_ray(&g, &VertexId::Named("a".into())),
            Err(Error::NoInfiniteExtension(_))
        ));
    }

    #[test]
    fn straight_ray_cut_function() {
        let g = grid(12);
        let ray = geodesic_ray(&g, &VertexId::pair(0, 0)).unwrap();
        for k in [1u32, 2, 3] {
            let cert = fat_ray_certificate(&g, &ray, k).unwrap();
            assert!(cert.failure.is_none() || cert.failure.unwrap() > 5);
            assert_eq!(cert.certified_start, 0);
            for n in 0..cert.certified_end.min(5) {
                assert_eq!(cert.cut(n), Some(n + k), "k={k} n={n}");
            }
        }
    }

    #[test]
    fn ball_hugging_ray_fails_certificate() {
        // hub joined to every ray vertex: all tails stay within 2 of r_0
        let mut edges = Vec::new();
        let hub = VertexId::Named("hub".into());
        let v = |i: usize| VertexId::Named(format!("v{i:02}"));
        for i in 0..20 {
            edges.push((hub.clone(), v(i)));
            if i > 0 {
                edges.push((v(i - 1), v(i)));
            }
        }
        let g = GraphHandle::instantiate(
            GeneratorSpec::explicit(&edges),
            Window { basepoint: hub, radius: 30 },
        )
        .unwrap();
        let ray = Ray::finite((0..20).map(v).collect());
        let cert = fat_ray_certificate(&g, &ray, 3).unwrap();
        assert_eq!(cert.failure, Some(0));
    }

    #[test]
    fn segmentation_blocks_and_fatness() {
        let g = grid(14);
        let ray = geodesic_ray(&g, &VertexId::pair(0, 0)).unwrap();
        // On a geodesic ray, sets span K+1 vertices: consecutive branch
        // paths borrow that set's two endpoints and must stay K apart.
        let m1 = segment_fat_ray(&g, &ray, 1).unwrap();
        assert!(m1.branch_sets.values().all(|s| s.len() == 2));
        assert!(crate::model::fatness(&g, &m1).unwrap().achieved.unwrap() >= 1);
        let m2 = segment_fat_ray(&g, &ray, 2).unwrap();
        assert!(m2.branch_sets.values().all(|s| s.len() == 3));
        let f = crate::model::fatness(&g, &m2).unwrap();
        assert!(f.achieved.unwrap() >= 2, "got {:?}", f.achieved);
        // K too large for the window
        assert!(segment_fat_ray(&g, &ray, 40).is_err());
    }

    #[test]
    fn straight_profile_is_identity() {
        let g = grid(36);
        let ray = geodesic_ray(&g, &VertexId::pair(0, 0)).unwrap();
        let prof = embedding_profile(&g, &ray.prefix, 30).unwrap();
        for (l, kl) in prof.table {
            assert_eq!(kl, l);
        }
    }

    #[test]
    fn staircase_double_ray_profile_matches_brute_force() {
        let g = grid(12);
        let phi = GeneratorSpec::Grid2d.automorphism("translate:1,1").unwrap();
        let (dr, m) = invariant_double_ray(&g, &phi).unwrap();
        assert_eq!(m, 1);
        let verts = dr.vertices();
        let prof = embedding_profile(&g, &verts, 6).unwrap();
        // brute force over all pairs at each path distance
        for (l, kl) in prof.table {
            let mut best = u32::MAX;
            for (p, u) in verts.iter().enumerate() {
                let q = p + l as usize;
                if q >= verts.len() {
                    break;
                }
                let d = g.distance(&[u.clone()], &[verts[q].clone()]).unwrap();
                best = best.min(d.exact_value().unwrap());
            }
            assert_eq!(kl, best, "L = {l}");
        }
    }

    #[test]
    fn axis_double_ray_for_horizontal_translation() {
        let g = grid(8);
        let phi = GeneratorSpec::Grid2d.automorphism("translate:1,0").unwrap();
        let (dr, m) = invariant_double_ray(&g, &phi).unwrap();
        assert_eq!(m, 1);
        assert!(dr.vertices().iter().all(|v| matches!(v, VertexId::Pair { y: 0, .. })));
        assert_eq!(dr.vertices().len(), 17);
    }

    #[test]
    fn rotation_rejected_as_elliptic() {
        let g = grid(6);
        let rot = GeneratorSpec::Grid2d.automorphism("rotate90").unwrap();
        assert!(matches!(invariant_double_ray(&g, &rot), Err(Error::EllipticNotAllowed(_))));
    }
}


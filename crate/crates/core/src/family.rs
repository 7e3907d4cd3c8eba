//! Pairwise-separated ray families: half-long/half-thick component analysis
//! around a double ray, the annulus construction along a non-elliptic
//! automorphism, elliptic tail separation, and translated geodesic families.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{Automorphism, AutomorphismKind};
use crate::graph::GraphHandle;
use crate::ray::{DoubleRay, Ray, RayExtension};
use crate::vertex::VertexId;

/// Nondecreasing per-ray fatness requirements.
pub type FatnessSchedule = Vec<u32>;

pub fn check_monotone(schedule: &[u32]) -> Result<()> {
    if schedule.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::ScheduleNotMonotone(schedule.to_vec()));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RayFamily {
    pub rays: Vec<Ray>,
    pub schedule: FatnessSchedule,
    /// Measured pairwise separations (lower bounds, exact within horizon);
    /// separations[i][j] for i < j, packed as an upper-triangular list.
    pub separations: Vec<Vec<u32>>,
}

impl RayFamily {
    pub fn separation(&self, i: usize, j: usize) -> Option<u32> {
        if i == j {
            return Some(0);
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.separations.get(a)?.get(b - a - 1).copied()
    }

    pub fn min_separation(&self) -> Option<u32> {
        self.separations.iter().flat_map(|r| r.iter().copied()).min()
    }
}

/// Measure all pairwise separations of a set of rays within the window.
pub fn measure_separations(g: &GraphHandle, rays: &[Ray]) -> Result<Vec<Vec<u32>>> {
    let idx_sets: Vec<Vec<u32>> = rays.iter().map(|r| r.materialize(g)).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(rays.len());
    for i in 0..rays.len() {
        let field = g.bfs_field(&idx_sets[i]);
        let mut row = Vec::new();
        for set in idx_sets.iter().skip(i + 1) {
            let mut best = u32::MAX;
            for &t in set {
                best = best.min(field[t as usize]);
            }
            row.push(best);
        }
        out.push(row);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct HalfLongComponent {
    /// Window indices of the component's vertices.
    pub vertices: Vec<u32>,
    /// Number of distinct double-ray vertices whose K-ball the component touches.
    pub contact_count: u32,
    pub flagged: bool,
    pub touches_horizon: bool,
}

/// Components of the window minus B(R, K), each with the number of ray
/// vertices whose K-ball it touches; flagged half-long at threshold T.
pub fn half_long_components(
    g: &GraphHandle,
    r: &DoubleRay,
    k: u32,
    threshold: u32,
) -> Result<Vec<HalfLongComponent>> {
    if threshold < 1 {
        return Err(Error::PremiseViolated("threshold T must be >= 1".into()));
    }
    let ray_idxs = r.materialize(g)?;
    let (ball, _) = g.ball_idx(&ray_idxs, k);
    let mut forb = vec![false; g.vertex_count()];
    for &b in &ball {
        forb[b as usize] = true;
    }
    let comps = g.components_avoiding_idx(&forb);

    // component id per vertex
    let mut comp_of = vec![u32::MAX; g.vertex_count()];
    for (ci, (vs, _, _)) in comps.iter().enumerate() {
        for &v in vs {
            comp_of[v as usize] = ci as u32;
        }
    }
    // a component touches B(r_i, K) iff some of its vertices is within K of r_i
    let mut touched: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); comps.len()];
    for (pos, &ri) in ray_idxs.iter().enumerate() {
        for (v, _) in g.bounded_ball_idx(&[ri], k) {
            // neighbors of the ball vertices reach into components
            for &w in g.adj_row(v) {
                let c = comp_of[w as usize];
                if c != u32::MAX {
                    touched[c as usize].insert(pos as u32);
                }
            }
            let c = comp_of[v as usize];
            if c != u32::MAX {
                touched[c as usize].insert(pos as u32);
            }
        }
    }
    Ok(comps
        .into_iter()
        .enumerate()
        .map(|(ci, (vs, _contacts, horizon))| {
            let contact_count = touched[ci].len() as u32;
            HalfLongComponent {
                vertices: vs,
                contact_count,
                flagged: contact_count >= threshold,
                touches_horizon: horizon,
            }
        })
        .collect())
}

pub fn default_threshold(g: &GraphHandle) -> u32 {
    (g.radius() / 4).max(1)
}

#[derive(Debug, Clone)]
pub struct HalfThickChain {
    /// One flagged component per level L = 0..; each contained in the previous.
    pub chain: Vec<HalfLongComponent>,
    /// Level at which the chain broke, if it did not reach lmax.
    pub break_level: Option<u32>,
}

/// Nested chain of half-long components of G - B(R, L) for L = 0..=lmax.
pub fn half_thick_witness(
    g: &GraphHandle,
    r: &DoubleRay,
    lmax: u32,
    threshold: u32,
) -> Result<HalfThickChain> {
    let mut chain: Vec<HalfLongComponent> = Vec::new();
    for l in 0..=lmax {
        let comps = half_long_components(g, r, l, threshold)?;
        let candidate = match chain.last() {
            None => comps
                .into_iter()
                .filter(|c| c.flagged)
                .min_by_key(|c| c.vertices.first().copied().unwrap_or(u32::MAX)),
            Some(prev) => {
                let prev_set: BTreeSet<u32> = prev.vertices.iter().copied().collect();
                comps
                    .into_iter()
                    .filter(|c| {
                        c.flagged && c.vertices.iter().all(|v| prev_set.contains(v))
                    })
                    .min_by_key(|c| c.vertices.first().copied().unwrap_or(u32::MAX))
            }
        };
        match candidate {
            Some(c) => chain.push(c),
            None => return Ok(HalfThickChain { chain, break_level: Some(l) }),
        }
    }
    Ok(HalfThickChain { chain, break_level: None })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnulusLevel {
    /// Inner exclusion radius: the ray avoids B(R, inner).
    pub inner: u32,
    /// Measured outer radius: every ray vertex is within this of R.
    pub outer: u32,
}

#[derive(Debug, Clone)]
pub struct AnnulusFamily {
    pub family: RayFamily,
    pub levels: Vec<AnnulusLevel>,
}

/// Recursive annulus construction along `phi`. Level j confines ray j to
/// G[R, K_j] - B(R, inner_j) with inner_j = K_{j-1} + gap_j, where the gap
/// plan defaults to gap_j = j (so separations measure >= max{i,j}).
pub fn annulus_ray_family(
    g: &GraphHandle,
    r: &DoubleRay,
    phi: &Automorphism,
    count: u32,
    gap_plan: Option<&[u32]>,
) -> Result<AnnulusFamily> {
    if phi.kind != AutomorphismKind::NonElliptic {
        return Err(Error::EllipticNotAllowed(phi.id.clone()));
    }
    let threshold = default_threshold(g);
    let ray_idxs = r.materialize(g)?;
    let mut rays: Vec<Ray> = Vec::new();
    let mut levels: Vec<AnnulusLevel> = Vec::new();
    let mut prev_outer = 0u32;
    for j in 0..count {
        let gap = gap_plan
            .and_then(|p| p.get(j as usize).copied())
            .unwrap_or(j)
            .max(if j == 0 { 0 } else { 1 });
        let inner = if j == 0 { gap } else { prev_outer + gap - 1 };
        // component of G - B(R, inner), must be half-long
        let comps = half_long_components(g, r, inner, threshold)?;
        let comp = comps
            .into_iter()
            .filter(|c| c.flagged)
            .min_by_key(|c| c.vertices.first().copied().unwrap_or(u32::MAX))
            .ok_or_else(|| {
                Error::EnlargeWindow(format!(
                    "no half-long component at annulus level {inner} (ray {j})"
                ))
            })?;
        let comp_set: BTreeSet<u32> = comp.vertices.iter().copied().collect();
        // contact vertices: component vertices adjacent to B(R, inner)
        let (ball, _) = g.ball_idx(&ray_idxs, inner);
        let ball_set: BTreeSet<u32> = ball.iter().copied().collect();
        let mut contacts: Vec<u32> = comp
            .vertices
            .iter()
            .copied()
            .filter(|&v| g.adj_row(v).iter().any(|w| ball_set.contains(w)))
            .collect();
        contacts.sort_unstable();
        if contacts.is_empty() {
            return Err(Error::EnlargeWindow(format!("annulus level {inner} has no contact")));
        }
        // prefer the contact with the most forward orbit room, ties canonical
        let orbit_room = |v: u32| -> u32 {
            let mut room = 0u32;
            let mut cur = g.vid(v).clone();
            while room < 4 * g.radius() {
                match phi.apply(&cur, 1) {
                    Ok(w) if g.contains(&w) => {
                        room += 1;
                        cur = w;
                    }
                    _ => break,
                }
            }
            room
        };
        let y = *contacts
            .iter()
            .max_by_key(|&&v| (orbit_room(v), std::cmp::Reverse(v)))
            .unwrap();

        // find the least n >= 1 with a y -- phi^n(y) path inside the component
        let mut found: Option<(i64, Vec<u32>)> = None;
        'outer: for n in 1..=8i64 {
            let img = match phi.apply(g.vid(y), n) {
                Ok(w) => w,
                Err(_) => break,
            };
            let Some(t) = g.idx(&img) else { break };
            if !comp_set.contains(&t) {
                continue;
            }
            let mut forb = vec![true; g.vertex_count()];
            for &v in &comp.vertices {
                forb[v as usize] = false;
            }
            if let Some(path) = g.shortest_path_avoiding(&[y], &[t], &forb, |_| 0) {
                found = Some((n, path));
                break 'outer;
            }
        }
        let (n, path) = found.ok_or_else(|| {
            Error::EnlargeWindow(format!(
                "no phi^n-matching path at annulus level {inner} (ray {j})"
            ))
        })?;

        // roll the path out along phi^n while it stays inside the window
        let seg: Vec<VertexId> = path.iter().map(|&i| g.vid(i).clone()).collect();
        let mut prefix: Vec<VertexId> = Vec::new();
        // backward first, to start the ray as early as the window allows
        let mut kk = 0i64;
        loop {
            let mut piece = Vec::new();
            let mut ok = true;
            for v in &seg[..seg.len() - 1] {
                match phi.apply(v, (kk - 1) * n) {
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
            prefix.splice(0..0, piece);
            kk -= 1;
        }
        let mut kf = 0i64;
        loop {
            let mut piece = Vec::new();
            let mut ok = true;
            for v in &seg[..seg.len() - 1] {
                match phi.apply(v, kf * n) {
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
            prefix.extend(piece);
            kf += 1;
        }
        let ray = Ray {
            prefix,
            extension: Some(RayExtension {
                automorphism: phi.id.clone(),
                power: n,
                start: 0,
                period: seg.len() - 1,
            }),
        };
        let idxs = ray.materialize(g)?; // checks simplicity and adjacency
        // measured outer radius and inner clearance
        let dist_to_r = g.bfs_field(&ray_idxs);
        let mut outer = 0u32;
        for &v in &idxs {
            let d = dist_to_r[v as usize];
            if d <= inner {
                return Err(Error::EnlargeWindow(format!(
                    "annulus ray {j} dips to distance {d} <= inner {inner}"
                )));
            }
            outer = outer.max(d);
        }
        levels.push(AnnulusLevel { inner, outer });
        prev_outer = outer;
        rays.push(ray);
    }
    let separations = measure_separations(g, &rays)?;
    let schedule = (0..count).collect();
    Ok(AnnulusFamily { family: RayFamily { rays, schedule, separations }, levels })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailSeparation {
    pub j: u32,
    /// Measured separation d(R_{>=j}, phi(R)) within the window.
    pub measured: u32,
}

/// Least j with d(R_{>= j}, phi(R)) >= K, by a bounded sweep from phi(R).
/// Requires phi elliptic with phi(r_0) = r_d for some d >= 4K on the ray.
pub fn tail_separation(
    g: &GraphHandle,
    ray: &Ray,
    phi: &Automorphism,
    k: u32,
) -> Result<TailSeparation> {
    if phi.kind == AutomorphismKind::NonElliptic {
        return Err(Error::NonEllipticNotAllowed(phi.id.clone()));
    }
    let idxs = ray.materialize(g)?;
    let pos: HashMap<u32, u32> = idxs.iter().enumerate().map(|(p, &i)| (i, p as u32)).collect();
    // premise: phi maps r_0 onto the ray at least 4K ahead
    let img0 = phi.apply(&ray.prefix[0], 1)?;
    let d_on_ray = g.idx(&img0).and_then(|i| pos.get(&i)).copied();
    match d_on_ray {
        Some(d) if (d as u64) >= 4 * k as u64 => {}
        Some(d) => {
            return Err(Error::PremiseViolated(format!(
                "phi(r_0) = r_{d} but the premise needs d >= 4K = {}",
                4 * k
            )))
        }
        None => {
            return Err(Error::PremiseViolated("phi(r_0) does not lie on the ray".into()));
        }
    }
    if k == 0 {
        return Ok(TailSeparation { j: 0, measured: 0 });
    }
    // image of the ray inside the window
    let mut image: Vec<u32> = Vec::new();
    for v in &ray.prefix {
        if let Ok(w) = phi.apply(v, 1) {
            if let Some(i) = g.idx(&w) {
                image.push(i);
            }
        }
    }
    if image.is_empty() {
        return Err(Error::PremiseViolated("phi(R) misses the window".into()));
    }
    image.sort_unstable();
    image.dedup();
    // ray positions within distance < K of the image
    let mut maxhit: Option<u32> = None;
    for (v, _) in g.bounded_ball_idx(&image, k - 1) {
        if let Some(&p) = pos.get(&v) {
            maxhit = Some(maxhit.map_or(p, |m| m.max(p)));
        }
    }
    let j = maxhit.map_or(0, |m| m + 1);
    if j as usize >= idxs.len() {
        return Err(Error::EnlargeWindow(format!(
            "no tail at distance >= {k} from phi(R) inside the window"
        )));
    }
    let tail: Vec<u32> = idxs[j as usize..].to_vec();
    let measured = g.dist_idx(&tail, &image);
    Ok(TailSeparation {
        j,
        measured: measured.window_dist.unwrap_or(measured.lower_bound),
    })
}

/// Family built from a geodesic ray and elliptic automorphisms phi_j with
/// phi_j(r_{i_{j-1}}) = r_{i_j} and gaps i_j - i_{j-1} >= 4j. Ray j is the
/// pullback of the tail beyond i_j; pairwise separation is certified via
/// tail_separation on the composed maps.
pub fn translate_ray_family(
    g: &GraphHandle,
    ray: &Ray,
    autos: &[Automorphism],
    anchors: &[u32],
) -> Result<RayFamily> {
    if autos.len() != anchors.len() {
        return Err(Error::PremiseViolated("one anchor index per automorphism".into()));
    }
    ray.materialize(g)?;
    // gap condition i_j - i_{j-1} >= 4j, with i_0 = 0
    let mut prev = 0u32;
    for (j, &i_j) in anchors.iter().enumerate() {
        let need = 4 * (j as u32 + 1);
        if i_j < prev + need {
            return Err(Error::PremiseViolated(format!(
                "anchor gap {} -> {} violates i_j - i_(j-1) >= 4j = {}",
                prev, i_j, need
            )));
        }
        prev = i_j;
    }
    for phi in autos {
        if phi.kind == AutomorphismKind::NonElliptic {
            return Err(Error::NonEllipticNotAllowed(phi.id.clone()));
        }
    }
    // check phi_j(r_{i_{j-1}}) = r_{i_j}
    let mut prev_anchor = 0usize;
    for (j, phi) in autos.iter().enumerate() {
        let from = &ray.prefix[prev_anchor];
        let to = &ray.prefix[anchors[j] as usize];
        let img = phi.apply(from, 1)?;
        if img != *to {
            return Err(Error::PremiseViolated(format!(
                "phi_{} maps {} to {} instead of {}",
                j + 1,
                from,
                img,
                to
            )));
        }
        prev_anchor = anchors[j] as usize;
    }

    // R'_0 = R; R'_j = phi_1^-1 ... phi_j^-1 (R_{>= i_j})
    let mut rays: Vec<Ray> = vec![Ray::finite(ray.prefix.clone())];
    for (j, &i_j) in anchors.iter().enumerate() {
        let mut prefix = Vec::new();
        for v in &ray.prefix[i_j as usize..] {
            let mut w = v.clone();
            for phi in autos[..=j].iter().rev() {
                w = phi.apply(&w, -1)?;
            }
            if !g.contains(&w) {
                break;
            }
            prefix.push(w);
        }
        if prefix.len() < 2 {
            return Err(Error::EnlargeWindow(format!("pulled-back ray {} leaves the window", j + 1)));
        }
        rays.push(Ray::finite(prefix));
    }

    // certified tail cuts: for k < j, tail_separation on the composed map
    let mut cut = vec![0u32; rays.len()];
    for j in 1..rays.len() {
        for k in 0..j {
            let mut phi = autos[j - 1].clone();
            for t in (k..j - 1).rev() {
                phi = Automorphism::compose(&phi, &autos[t]);
            }
            // compositions of elliptic maps are taken elliptic by hypothesis
            let phi = phi.with_kind(AutomorphismKind::Elliptic);
            let start = if k == 0 { 0 } else { anchors[k - 1] as usize };
            let tail = Ray::finite(ray.prefix[start..].to_vec());
            let sep = tail_separation(g, &tail, &phi, j as u32)
                .map_err(|e| e.in_stage("translate_ray_family", "enlarge window"))?;
            // positions are relative to the tail; shift to absolute, then to ray j
            let absolute = start as u32 + sep.j;
            let from_ij = absolute.saturating_sub(anchors[j - 1]);
            cut[j] = cut[j].max(from_ij);
        }
    }
    let trimmed: Vec<Ray> = rays
        .iter()
        .enumerate()
        .map(|(j, r)| {
            if cut[j] as usize >= r.prefix.len() {
                Err(Error::EnlargeWindow(format!("certified tail of ray {j} leaves the window")))
            } else {
                Ok(r.tail(cut[j] as usize))
            }
        })
        .collect::<Result<_>>()?;
    let separations = measure_separations(g, &trimmed)?;
    let schedule = (0..trimmed.len() as u32).collect();
    Ok(RayFamily { rays: trimmed, schedule, separations })
}

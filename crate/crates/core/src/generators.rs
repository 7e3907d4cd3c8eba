//! Built-in graph generators and their automorphism registries.
//!
//! A generator is a deterministic neighbor oracle over canonical vertex ids.
//! All generators except `explicit` describe infinite graphs; they are only
//! ever materialized through a finite window (see [`crate::graph`]).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vertex::VertexId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeneratorSpec {
    /// The grid on Z x Z.
    Grid2d,
    /// The grid on N x N.
    HalfGrid,
    /// Half-grid with every other rung deleted: vertical edges everywhere,
    /// horizontal edge (x,y)-(x+1,y) iff x+y is even.
    HexHalfGrid,
    /// Clique q_0..q_{n-1} plus side rays R_1..R_{n-1}; vertex i of ray j is
    /// joined to q_i by a path of length j. Ray R_0 is glued onto the clique
    /// (its paths have length 0) and continues past it.
    Example41 { n: u64 },
    /// Spine ray T plus side rays R^j; vertex r_i^j is joined to t_{i+j} by a
    /// path of length k-1. With k = 1 the side rays collapse onto the spine.
    Example42 { k: u64 },
    /// Cycle of length n with an infinite spoke ray at every cycle vertex.
    CycleSpokes { n: u64 },
    /// Finite graph given by an explicit edge list.
    Explicit { adjacency: BTreeMap<VertexId, BTreeSet<VertexId>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutomorphismKind {
    Elliptic,
    NonElliptic,
    Undeclared,
}

/// A computable vertex bijection with its inverse and a declared ellipticity
/// kind. The kind is declared by the generator, never inferred from a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automorphism {
    pub id: String,
    pub kind: AutomorphismKind,
    def: AutoDef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum AutoDef {
    Translate { dx: i64, dy: i64 },
    Rotate90,
    CycleRot { n: u64, a: u64 },
    Compose(Vec<AutoDef>),
}

impl AutoDef {
    fn apply(&self, v: &VertexId, power: i64) -> Option<VertexId> {
        if power == 0 {
            return Some(v.clone());
        }
        let mut cur = v.clone();
        let steps = power.unsigned_abs();
        let fwd = power > 0;
        for _ in 0..steps {
            cur = self.step(&cur, fwd)?;
        }
        Some(cur)
    }

    fn step(&self, v: &VertexId, fwd: bool) -> Option<VertexId> {
        match self {
            AutoDef::Translate { dx, dy } => {
                let (dx, dy) = if fwd { (*dx, *dy) } else { (-dx, -dy) };
                match v {
                    VertexId::Pair { x, y } => Some(VertexId::pair(x + dx, y + dy)),
                    _ => None,
                }
            }
            AutoDef::Rotate90 => match v {
                // (x,y) -> (-y,x); inverse (x,y) -> (y,-x)
                VertexId::Pair { x, y } => {
                    Some(if fwd { VertexId::pair(-y, *x) } else { VertexId::pair(*y, -x) })
                }
                _ => None,
            },
            AutoDef::CycleRot { n, a } => {
                let n = *n;
                let shift = |i: u64| -> u64 {
                    if fwd {
                        (i + a) % n
                    } else {
                        (i + n - (a % n)) % n
                    }
                };
                match v {
                    VertexId::Cycle { i } => Some(VertexId::Cycle { i: shift(*i) }),
                    VertexId::Spoke { i, k } => Some(VertexId::Spoke { i: shift(*i), k: *k }),
                    _ => None,
                }
            }
            AutoDef::Compose(parts) => {
                // Forward applies right-to-left like function composition.
                let mut cur = v.clone();
                if fwd {
                    for p in parts.iter().rev() {
                        cur = p.step(&cur, true)?;
                    }
                } else {
                    for p in parts {
                        cur = p.step(&cur, false)?;
                    }
                }
                Some(cur)
            }
        }
    }
}

impl Automorphism {
    /// Re-declare the ellipticity kind (compositions of declared-elliptic
    /// maps are taken elliptic by hypothesis).
    pub fn with_kind(mut self, kind: AutomorphismKind) -> Automorphism {
        self.kind = kind;
        self
    }

    /// Apply phi^power to a vertex. Errors if the map is not defined on it.
    pub fn apply(&self, v: &VertexId, power: i64) -> Result<VertexId> {
        self.def.apply(v, power).ok_or_else(|| Error::AutomorphismUndefined {
            id: self.id.clone(),
            vertex: v.token(),
        })
    }

    /// phi_outer composed with phi_inner (outer applied last).
    pub fn compose(outer: &Automorphism, inner: &Automorphism) -> Automorphism {
        let kind = match (outer.kind, inner.kind) {
            (AutomorphismKind::Elliptic, AutomorphismKind::Elliptic) => AutomorphismKind::Elliptic,
            _ => AutomorphismKind::Undeclared,
        };
        Automorphism {
            id: format!("{}*{}", outer.id, inner.id),
            kind,
            def: AutoDef::Compose(vec![outer.def.clone(), inner.def.clone()]),
        }
    }

    pub fn is_identity_on(&self, v: &VertexId) -> bool {
        self.def.apply(v, 1).map(|w| w == *v).unwrap_or(false)
    }
}

impl GeneratorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorSpec::Grid2d => "grid2d",
            GeneratorSpec::HalfGrid => "halfgrid",
            GeneratorSpec::HexHalfGrid => "hexhalfgrid",
            GeneratorSpec::Example41 { .. } => "example41",
            GeneratorSpec::Example42 { .. } => "example42",
            GeneratorSpec::CycleSpokes { .. } => "cycle_spokes",
            GeneratorSpec::Explicit { .. } => "explicit",
        }
    }

    pub fn params(&self) -> BTreeMap<String, i64> {
        let mut m = BTreeMap::new();
        match self {
            GeneratorSpec::Example41 { n } => {
                m.insert("n".into(), *n as i64);
            }
            GeneratorSpec::Example42 { k } => {
                m.insert("K".into(), *k as i64);
            }
            GeneratorSpec::CycleSpokes { n } => {
                m.insert("n".into(), *n as i64);
            }
            _ => {}
        }
        m
    }

    /// Build a generator from a name and parameter map (the descriptor form).
    pub fn from_name(name: &str, params: &BTreeMap<String, i64>) -> Result<GeneratorSpec> {
        let get = |key: &str| -> Result<u64> {
            let v = *params.get(key).ok_or_else(|| Error::InvalidParameter {
                generator: name.to_string(),
                detail: format!("missing parameter `{key}`"),
            })?;
            u64::try_from(v).map_err(|_| Error::InvalidParameter {
                generator: name.to_string(),
                detail: format!("parameter `{key}` must be nonnegative"),
            })
        };
        match name {
            "grid2d" => Ok(GeneratorSpec::Grid2d),
            "halfgrid" => Ok(GeneratorSpec::HalfGrid),
            "hexhalfgrid" => Ok(GeneratorSpec::HexHalfGrid),
            "example41" => {
                let n = get("n")?;
                if n < 2 {
                    return Err(Error::InvalidParameter {
                        generator: name.into(),
                        detail: "clique truncation n must be >= 2".into(),
                    });
                }
                Ok(GeneratorSpec::Example41 { n })
            }
            "example42" => {
                let k = get("K")?;
                if k == 0 {
                    return Err(Error::InvalidParameter {
                        generator: name.into(),
                        detail: "parameter K must be >= 1".into(),
                    });
                }
                Ok(GeneratorSpec::Example42 { k })
            }
            "cycle_spokes" => {
                let n = get("n")?;
                if n < 3 {
                    return Err(Error::InvalidParameter {
                        generator: name.into(),
                        detail: "cycle length n must be >= 3".into(),
                    });
                }
                Ok(GeneratorSpec::CycleSpokes { n })
            }
            other => Err(Error::UnknownGenerator(other.to_string())),
        }
    }

    /// Parse a compact CLI spec like `example42:K=3` or `grid2d`.
    pub fn parse_compact(s: &str) -> Result<GeneratorSpec> {
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (s, None),
        };
        let mut params = BTreeMap::new();
        if let Some(rest) = rest {
            for kv in rest.split(',') {
                let (k, v) = kv.split_once('=').ok_or_else(|| Error::InvalidParameter {
                    generator: name.to_string(),
                    detail: format!("malformed parameter `{kv}`"),
                })?;
                let v: i64 = v.parse().map_err(|_| Error::InvalidParameter {
                    generator: name.to_string(),
                    detail: format!("non-integer parameter `{kv}`"),
                })?;
                params.insert(k.to_string(), v);
            }
        }
        GeneratorSpec::from_name(name, &params)
    }

    /// Build an explicit finite graph from an undirected edge list.
    pub fn explicit(edges: &[(VertexId, VertexId)]) -> GeneratorSpec {
        let mut adjacency: BTreeMap<VertexId, BTreeSet<VertexId>> = BTreeMap::new();
        for (u, v) in edges {
            if u == v {
                continue;
            }
            adjacency.entry(u.clone()).or_default().insert(v.clone());
            adjacency.entry(v.clone()).or_default().insert(u.clone());
        }
        GeneratorSpec::Explicit { adjacency }
    }

    /// Parse edge-list lines "u v" in token form.
    pub fn explicit_from_lines(text: &str) -> Result<GeneratorSpec> {
        let mut edges = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let u = it.next().ok_or_else(|| Error::BadToken(line.to_string()))?;
            let v = it.next().ok_or_else(|| Error::BadToken(line.to_string()))?;
            if it.next().is_some() {
                return Err(Error::BadToken(line.to_string()));
            }
            edges.push((VertexId::parse(u)?, VertexId::parse(v)?));
        }
        Ok(GeneratorSpec::explicit(&edges))
    }

    pub fn default_basepoint(&self) -> VertexId {
        match self {
            GeneratorSpec::Grid2d | GeneratorSpec::HalfGrid | GeneratorSpec::HexHalfGrid => {
                VertexId::pair(0, 0)
            }
            GeneratorSpec::Example41 { .. } => VertexId::Clique { i: 0 },
            GeneratorSpec::Example42 { .. } => VertexId::Tee { i: 0 },
            GeneratorSpec::CycleSpokes { .. } => VertexId::Cycle { i: 0 },
            GeneratorSpec::Explicit { adjacency } => adjacency
                .keys()
                .min()
                .cloned()
                .unwrap_or(VertexId::Named("v".into())),
        }
    }

    /// Canonicalize a vertex id for this generator. Folds the glued cases
    /// (example42 with K=1, example41 ray 0) onto their canonical tokens.
    pub fn canonicalize(&self, v: &VertexId) -> VertexId {
        match (self, v) {
            (GeneratorSpec::Example42 { k: 1 }, VertexId::RayV { j, i }) => {
                VertexId::Tee { i: i + j }
            }
            (GeneratorSpec::Example41 { n }, VertexId::RayV { j: 0, i }) if i < n => {
                VertexId::Clique { i: *i }
            }
            _ => v.clone(),
        }
    }

    /// Whether this vertex belongs to the generator's (infinite) graph.
    pub fn contains(&self, v: &VertexId) -> bool {
        match self {
            GeneratorSpec::Grid2d => matches!(v, VertexId::Pair { .. }),
            GeneratorSpec::HalfGrid | GeneratorSpec::HexHalfGrid => {
                matches!(v, VertexId::Pair { x, y } if *x >= 0 && *y >= 0)
            }
            GeneratorSpec::Example41 { n } => match v {
                VertexId::Clique { i } => i < n,
                VertexId::RayV { j: 0, i } => *i >= *n,
                VertexId::RayV { j, .. } => *j >= 1 && *j < *n,
                VertexId::Conn { i, j, s } => i < n && *j >= 1 && *j < *n && *s >= 1 && *s < *j,
                _ => false,
            },
            GeneratorSpec::Example42 { k } => match v {
                VertexId::Tee { .. } => true,
                VertexId::RayV { .. } => *k >= 2,
                VertexId::Conn { s, .. } => *k >= 3 && *s >= 1 && *s <= k - 2,
                _ => false,
            },
            GeneratorSpec::CycleSpokes { n } => match v {
                VertexId::Cycle { i } => i < n,
                VertexId::Spoke { i, k } => i < n && *k >= 1,
                _ => false,
            },
            GeneratorSpec::Explicit { adjacency } => adjacency.contains_key(v),
        }
    }

    /// Neighbors in the full (infinite) graph, sorted canonically.
    pub fn neighbors(&self, v: &VertexId) -> Vec<VertexId> {
        let mut out: Vec<VertexId> = match self {
            GeneratorSpec::Grid2d => match v {
                VertexId::Pair { x, y } => vec![
                    VertexId::pair(x + 1, *y),
                    VertexId::pair(x - 1, *y),
                    VertexId::pair(*x, y + 1),
                    VertexId::pair(*x, y - 1),
                ],
                _ => vec![],
            },
            GeneratorSpec::HalfGrid => match v {
                VertexId::Pair { x, y } => [(1, 0), (-1, 0), (0, 1), (0, -1)]
                    .iter()
                    .map(|(dx, dy)| VertexId::pair(x + dx, y + dy))
                    .filter(|w| self.contains(w))
                    .collect(),
                _ => vec![],
            },
            GeneratorSpec::HexHalfGrid => match v {
                VertexId::Pair { x, y } => {
                    let mut n = vec![VertexId::pair(*x, y + 1), VertexId::pair(*x, y - 1)];
                    if (x + y).rem_euclid(2) == 0 {
                        n.push(VertexId::pair(x + 1, *y));
                    } else {
                        n.push(VertexId::pair(x - 1, *y));
                    }
                    n.into_iter().filter(|w| self.contains(w)).collect()
                }
                _ => vec![],
            },
            GeneratorSpec::Example41 { n } => match v {
                VertexId::Clique { i } => {
                    let mut out: Vec<VertexId> =
                        (0..*n).filter(|q| q != i).map(|i| VertexId::Clique { i }).collect();
                    // connector starts toward every side ray
                    for j in 1..*n {
                        out.push(if j == 1 {
                            VertexId::RayV { j: 1, i: *i }
                        } else {
                            VertexId::Conn { i: *i, j, s: 1 }
                        });
                    }
                    // the glued ray 0 continues past the truncated clique
                    if *i + 1 == *n {
                        out.push(VertexId::RayV { j: 0, i: *n });
                    }
                    out
                }
                VertexId::RayV { j: 0, i } => {
                    let mut out = vec![VertexId::RayV { j: 0, i: i + 1 }];
                    out.push(if *i == *n {
                        VertexId::Clique { i: n - 1 }
                    } else {
                        VertexId::RayV { j: 0, i: i - 1 }
                    });
                    out
                }
                VertexId::RayV { j, i } => {
                    let mut out = vec![VertexId::RayV { j: *j, i: i + 1 }];
                    if *i > 0 {
                        out.push(VertexId::RayV { j: *j, i: i - 1 });
                    }
                    // connector end arriving from q_i
                    out.push(if *j == 1 {
                        VertexId::Clique { i: *i }
                    } else {
                        VertexId::Conn { i: *i, j: *j, s: j - 1 }
                    });
                    out
                }
                VertexId::Conn { i, j, s } => {
                    let lo = if *s == 1 {
                        VertexId::Clique { i: *i }
                    } else {
                        VertexId::Conn { i: *i, j: *j, s: s - 1 }
                    };
                    let hi = if *s == j - 1 {
                        VertexId::RayV { j: *j, i: *i }
                    } else {
                        VertexId::Conn { i: *i, j: *j, s: s + 1 }
                    };
                    vec![lo, hi]
                }
                _ => vec![],
            },
            GeneratorSpec::Example42 { k } => match v {
                VertexId::Tee { i } => {
                    let mut out = vec![VertexId::Tee { i: i + 1 }];
                    if *i > 0 {
                        out.push(VertexId::Tee { i: i - 1 });
                    }
                    if *k >= 2 {
                        // one connector end for each split i = a + b of this level
                        for a in 0..=*i {
                            let b = i - a;
                            out.push(if *k == 2 {
                                VertexId::RayV { j: b, i: a }
                            } else {
                                VertexId::Conn { i: a, j: b, s: k - 2 }
                            });
                        }
                    }
                    out
                }
                VertexId::RayV { j, i } => {
                    let mut out = vec![VertexId::RayV { j: *j, i: i + 1 }];
                    if *i > 0 {
                        out.push(VertexId::RayV { j: *j, i: i - 1 });
                    }
                    out.push(if *k == 2 {
                        VertexId::Tee { i: i + j }
                    } else {
                        VertexId::Conn { i: *i, j: *j, s: 1 }
                    });
                    out
                }
                VertexId::Conn { i, j, s } => {
                    let lo = if *s == 1 {
                        VertexId::RayV { j: *j, i: *i }
                    } else {
                        VertexId::Conn { i: *i, j: *j, s: s - 1 }
                    };
                    let hi = if *s == k - 2 {
                        VertexId::Tee { i: i + j }
                    } else {
                        VertexId::Conn { i: *i, j: *j, s: s + 1 }
                    };
                    vec![lo, hi]
                }
                _ => vec![],
            },
            GeneratorSpec::CycleSpokes { n } => match v {
                VertexId::Cycle { i } => vec![
                    VertexId::Cycle { i: (i + 1) % n },
                    VertexId::Cycle { i: (i + n - 1) % n },
                    VertexId::Spoke { i: *i, k: 1 },
                ],
                VertexId::Spoke { i, k } => {
                    let mut out = vec![VertexId::Spoke { i: *i, k: k + 1 }];
                    out.push(if *k == 1 {
                        VertexId::Cycle { i: *i }
                    } else {
                        VertexId::Spoke { i: *i, k: k - 1 }
                    });
                    out
                }
                _ => vec![],
            },
            GeneratorSpec::Explicit { adjacency } => adjacency
                .get(v)
                .map(|s| s.iter().cloned().collect())
                .unwrap_or_default(),
        };
        out.sort();
        out.dedup();
        out
    }

    /// The n-th level of example42: {t_n} plus every r_i^j with i+j = n.
    pub fn level_set(&self, n: u64) -> Option<Vec<VertexId>> {
        match self {
            GeneratorSpec::Example42 { k } => {
                let mut out = vec![VertexId::Tee { i: n }];
                if *k >= 2 {
                    for i in 0..=n {
                        out.push(VertexId::RayV { j: n - i, i });
                    }
                }
                out.sort();
                out.dedup();
                Some(out)
            }
            _ => None,
        }
    }

    /// The automorphisms this generator registers, by id.
    pub fn automorphism(&self, id: &str) -> Result<Automorphism> {
        match self {
            GeneratorSpec::Grid2d => {
                if let Some(rest) = id.strip_prefix("translate:") {
                    let (dx, dy) = rest.split_once(',').ok_or_else(|| Error::UnknownAutomorphism(id.into()))?;
                    let dx: i64 = dx.parse().map_err(|_| Error::UnknownAutomorphism(id.into()))?;
                    let dy: i64 = dy.parse().map_err(|_| Error::UnknownAutomorphism(id.into()))?;
                    let kind = if dx == 0 && dy == 0 {
                        AutomorphismKind::Elliptic
                    } else {
                        AutomorphismKind::NonElliptic
                    };
                    return Ok(Automorphism { id: id.into(), kind, def: AutoDef::Translate { dx, dy } });
                }
                if id == "rotate90" {
                    return Ok(Automorphism {
                        id: id.into(),
                        kind: AutomorphismKind::Elliptic,
                        def: AutoDef::Rotate90,
                    });
                }
                Err(Error::UnknownAutomorphism(id.into()))
            }
            GeneratorSpec::CycleSpokes { n } => {
                if let Some(rest) = id.strip_prefix("rot:") {
                    let a: u64 = rest.parse().map_err(|_| Error::UnknownAutomorphism(id.into()))?;
                    return Ok(Automorphism {
                        id: id.into(),
                        kind: AutomorphismKind::Elliptic,
                        def: AutoDef::CycleRot { n: *n, a },
                    });
                }
                Err(Error::UnknownAutomorphism(id.into()))
            }
            _ => Err(Error::UnknownAutomorphism(id.into())),
        }
    }

    /// Default automorphism data for pipeline auto mode: the registered
    /// non-elliptic automorphism if any, else the registered elliptic ones.
    pub fn default_auto(&self) -> Option<Automorphism> {
        match self {
            GeneratorSpec::Grid2d => self.automorphism("translate:1,0").ok(),
            GeneratorSpec::CycleSpokes { n } => self.automorphism(&format!("rot:{}", n / 4)).ok(),
            _ => None,
        }
    }

    /// A registered automorphism mapping `from` to `to`, if one exists.
    pub fn matching_automorphism(&self, from: &VertexId, to: &VertexId) -> Option<Automorphism> {
        match self {
            GeneratorSpec::Grid2d => match (from, to) {
                (VertexId::Pair { x, y }, VertexId::Pair { x: x2, y: y2 }) => {
                    self.automorphism(&format!("translate:{},{}", x2 - x, y2 - y)).ok()
                }
                _ => None,
            },
            GeneratorSpec::CycleSpokes { n } => {
                let shift = |a: u64, b: u64| (b + n - a % n) % n;
                match (from, to) {
                    (VertexId::Cycle { i }, VertexId::Cycle { i: i2 }) => {
                        self.automorphism(&format!("rot:{}", shift(*i, *i2))).ok()
                    }
                    (VertexId::Spoke { i, k }, VertexId::Spoke { i: i2, k: k2 }) if k == k2 => {
                        self.automorphism(&format!("rot:{}", shift(*i, *i2))).ok()
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_neighbor_order_matches_canonical() {
        let g = GeneratorSpec::Grid2d;
        let n = g.neighbors(&VertexId::pair(0, 0));
        let toks: Vec<String> = n.iter().map(|v| v.token()).collect();
        assert_eq!(toks, vec!["1,0", "-1,0", "0,1", "0,-1"]);
    }

    #[test]
    fn halfgrid_corner() {
        let g = GeneratorSpec::HalfGrid;
        let n = g.neighbors(&VertexId::pair(0, 0));
        let toks: Vec<String> = n.iter().map(|v| v.token()).collect();
        assert_eq!(toks, vec!["1,0", "0,1"]);
    }

    #[test]
    fn hex_rung_parity() {
        let g = GeneratorSpec::HexHalfGrid;
        // (0,0): rung right (0+0 even)
        assert!(g.neighbors(&VertexId::pair(0, 0)).contains(&VertexId::pair(1, 0)));
        // (0,1): no left neighbor, no right rung (0+1 odd) -> degree 2
        assert_eq!(g.neighbors(&VertexId::pair(0, 1)).len(), 2);
        // symmetry
        for (x, y) in [(0i64, 0i64), (1, 0), (2, 3), (5, 2)] {
            let v = VertexId::pair(x, y);
            for w in g.neighbors(&v) {
                assert!(g.neighbors(&w).contains(&v), "asymmetric at {v}-{w}");
            }
        }
    }

    #[test]
    fn example42_connector_length() {
        // K = 3: connector r_i^j .. t_{i+j} has exactly one interior vertex,
        // i.e. length K-1 = 2.
        let g = GeneratorSpec::Example42 { k: 3 };
        let r = VertexId::RayV { j: 2, i: 1 };
        let n = g.neighbors(&r);
        assert!(n.contains(&VertexId::Conn { i: 1, j: 2, s: 1 }));
        let c = VertexId::Conn { i: 1, j: 2, s: 1 };
        let nc = g.neighbors(&c);
        assert!(nc.contains(&VertexId::Tee { i: 3 }));
        assert!(nc.contains(&r));
    }

    #[test]
    fn example42_k2_direct_edge() {
        // K = 2: connector is a single edge (length 1, no interior vertex).
        let g = GeneratorSpec::Example42 { k: 2 };
        assert!(g.neighbors(&VertexId::RayV { j: 2, i: 1 }).contains(&VertexId::Tee { i: 3 }));
    }

    #[test]
    fn example42_k1_collapses() {
        let g = GeneratorSpec::Example42 { k: 1 };
        assert_eq!(g.canonicalize(&VertexId::RayV { j: 3, i: 2 }), VertexId::Tee { i: 5 });
        assert_eq!(g.neighbors(&VertexId::Tee { i: 4 }).len(), 2);
    }

    #[test]
    fn example42_degree_bound() {
        let g = GeneratorSpec::Example42 { k: 3 };
        for i in 0..25u64 {
            let deg = g.neighbors(&VertexId::Tee { i }).len() as u64;
            assert!(deg <= (i + 1) * (i + 1) + 2);
        }
    }

    #[test]
    fn rot_inverse() {
        let g = GeneratorSpec::CycleSpokes { n: 24 };
        let phi = g.automorphism("rot:8").unwrap();
        let v = VertexId::Spoke { i: 20, k: 3 };
        let w = phi.apply(&v, 1).unwrap();
        assert_eq!(w, VertexId::Spoke { i: 4, k: 3 });
        assert_eq!(phi.apply(&w, -1).unwrap(), v);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(GeneratorSpec::parse_compact("example42:K=0").is_err());
        assert!(GeneratorSpec::parse_compact("cycle_spokes:n=2").is_err());
        assert!(GeneratorSpec::parse_compact("nosuch").is_err());
    }
}

//! Canonical vertex identifiers.
//!
//! Every generator names its vertices with a printable token that parses back
//! to generator coordinates ("x,y" for grids, "t:i" / "r:j,i" / "p:i,j,s" for
//! the ray-and-connector families, "c:i" / "s:i,k" for the spoked cycle).
//! Tokens are the exchange format; ordering is defined on the parsed
//! coordinates so that neighbor listings and tie-breaks are reproducible.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum VertexId {
    /// Grid-family vertex at column x, row y. Token "x,y".
    Pair { x: i64, y: i64 },
    /// Spine ray vertex t_i. Token "t:i".
    Tee { i: u64 },
    /// Vertex i on side ray j. Token "r:j,i".
    RayV { j: u64, i: u64 },
    /// Interior vertex s of the connector path between index i and ray j. Token "p:i,j,s".
    Conn { i: u64, j: u64, s: u64 },
    /// Clique vertex q_i. Token "q:i".
    Clique { i: u64 },
    /// Cycle vertex c_i. Token "c:i".
    Cycle { i: u64 },
    /// Spoke vertex k steps out from cycle vertex i. Token "s:i,k".
    Spoke { i: u64, k: u64 },
    /// Free-form name from an explicit edge list.
    Named(String),
}

/// Sign-interleaved key: 0, 1, -1, 2, -2, ... so nonnegative coordinates sort
/// before their negatives of equal magnitude.
fn zigzag(n: i64) -> u64 {
    if n >= 0 {
        (n as u64) << 1
    } else {
        (((-n) as u64) << 1) + 1
    }
}

impl VertexId {
    pub fn pair(x: i64, y: i64) -> Self {
        VertexId::Pair { x, y }
    }

    fn rank(&self) -> u8 {
        match self {
            VertexId::Pair { .. } => 0,
            VertexId::Tee { .. } => 1,
            VertexId::RayV { .. } => 2,
            VertexId::Conn { .. } => 3,
            VertexId::Clique { .. } => 4,
            VertexId::Cycle { .. } => 5,
            VertexId::Spoke { .. } => 6,
            VertexId::Named(_) => 7,
        }
    }

    pub fn token(&self) -> String {
        self.to_string()
    }

    pub fn parse(token: &str) -> Result<Self, Error> {
        token.parse()
    }
}

impl Ord for VertexId {
    fn cmp(&self, other: &Self) -> Ordering {
        use VertexId::*;
        match (self, other) {
            // Row-major with the zigzag sign order; ties by column. Keeps the
            // eastward ray (1,0),(2,0),... lexicographically least from the origin.
            (Pair { x, y }, Pair { x: x2, y: y2 }) => {
                (zigzag(*y), zigzag(*x)).cmp(&(zigzag(*y2), zigzag(*x2)))
            }
            (Tee { i }, Tee { i: i2 }) => i.cmp(i2),
            (RayV { j, i }, RayV { j: j2, i: i2 }) => (j, i).cmp(&(j2, i2)),
            (Conn { i, j, s }, Conn { i: i2, j: j2, s: s2 }) => (i, j, s).cmp(&(i2, j2, s2)),
            (Clique { i }, Clique { i: i2 }) => i.cmp(i2),
            (Cycle { i }, Cycle { i: i2 }) => i.cmp(i2),
            (Spoke { i, k }, Spoke { i: i2, k: k2 }) => (i, k).cmp(&(i2, k2)),
            (Named(a), Named(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for VertexId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexId::Pair { x, y } => write!(f, "{},{}", x, y),
            VertexId::Tee { i } => write!(f, "t:{}", i),
            VertexId::RayV { j, i } => write!(f, "r:{},{}", j, i),
            VertexId::Conn { i, j, s } => write!(f, "p:{},{},{}", i, j, s),
            VertexId::Clique { i } => write!(f, "q:{}", i),
            VertexId::Cycle { i } => write!(f, "c:{}", i),
            VertexId::Spoke { i, k } => write!(f, "s:{},{}", i, k),
            VertexId::Named(s) => write!(f, "{}", s),
        }
    }
}

fn split2(s: &str) -> Option<(&str, &str)> {
    let mut it = s.splitn(2, ',');
    Some((it.next()?, it.next()?))
}

impl FromStr for VertexId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::BadToken(s.to_string());
        if let Some(rest) = s.strip_prefix("t:") {
            return rest.parse().map(|i| VertexId::Tee { i }).map_err(|_| bad());
        }
        if let Some(rest) = s.strip_prefix("r:") {
            let (j, i) = split2(rest).ok_or_else(bad)?;
            return Ok(VertexId::RayV { j: j.parse().map_err(|_| bad())?, i: i.parse().map_err(|_| bad())? });
        }
        if let Some(rest) = s.strip_prefix("p:") {
            let mut it = rest.split(',');
            let i = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let j = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let st = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if it.next().is_some() {
                return Err(bad());
            }
            return Ok(VertexId::Conn { i, j, s: st });
        }
        if let Some(rest) = s.strip_prefix("q:") {
            return rest.parse().map(|i| VertexId::Clique { i }).map_err(|_| bad());
        }
        if let Some(rest) = s.strip_prefix("c:") {
            return rest.parse().map(|i| VertexId::Cycle { i }).map_err(|_| bad());
        }
        if let Some(rest) = s.strip_prefix("s:") {
            let (i, k) = split2(rest).ok_or_else(bad)?;
            return Ok(VertexId::Spoke { i: i.parse().map_err(|_| bad())?, k: k.parse().map_err(|_| bad())? });
        }
        if let Some((x, y)) = split2(s) {
            if let (Ok(x), Ok(y)) = (x.parse(), y.parse()) {
                return Ok(VertexId::Pair { x, y });
            }
        }
        if s.is_empty() || s.contains(char::is_whitespace) {
            return Err(bad());
        }
        Ok(VertexId::Named(s.to_string()))
    }
}

impl Serialize for VertexId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

struct VertexIdVisitor;

impl Visitor<'_> for VertexIdVisitor {
    type Value = VertexId;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "a vertex token")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<VertexId, E> {
        VertexId::parse(v).map_err(|e| E::custom(e.to_string()))
    }
}

impl<'de> Deserialize<'de> for VertexId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_str(VertexIdVisitor)
    }
}

//! Serialized formats (graph descriptors, rays, families, models,
//! certificates) and independent certificate re-verification.
//!
//! A certificate is self-contained: the checker re-instantiates the graph
//! from the descriptor and recomputes every model-level claim from scratch,
//! never trusting the construction that produced it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::RayFamily;
use crate::graph::{GraphHandle, Window};
use crate::generators::GeneratorSpec;
use crate::model::{
    distance_matrix, validate_model, FatnessReport, GradedReport, MinorModel, UltraFatTable,
};
use crate::par::ExecMode;
use crate::pipeline::ClauseReport;
use crate::ray::Ray;
use crate::vertex::VertexId;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphDescriptor {
    pub generator: String,
    #[serde(default)]
    pub params: BTreeMap<String, i64>,
    /// explicit graphs carry their edge list inline
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(String, String)>>,
    pub basepoint: String,
    pub radius: u32,
}

impl GraphDescriptor {
    pub fn new(spec: &GeneratorSpec, window: &Window) -> GraphDescriptor {
        let edges = match spec {
            GeneratorSpec::Explicit { adjacency } => {
                let mut out = Vec::new();
                for (u, vs) in adjacency {
                    for v in vs {
                        if u < v {
                            out.push((u.token(), v.token()));
                        }
                    }
                }
                Some(out)
            }
            _ => None,
        };
        GraphDescriptor {
            generator: spec.name().to_string(),
            params: spec.params(),
            edges,
            basepoint: window.basepoint.token(),
            radius: window.radius,
        }
    }

    pub fn instantiate(&self) -> Result<GraphHandle> {
        let spec = if self.generator == "explicit" {
            let edges = self
                .edges
                .as_ref()
                .ok_or_else(|| Error::Schema("explicit descriptor without edges".into()))?;
            let parsed: Vec<(VertexId, VertexId)> = edges
                .iter()
                .map(|(u, v)| Ok((VertexId::parse(u)?, VertexId::parse(v)?)))
                .collect::<Result<_>>()?;
            GeneratorSpec::explicit(&parsed)
        } else {
            GeneratorSpec::from_name(&self.generator, &self.params)?
        };
        let basepoint = VertexId::parse(&self.basepoint)?;
        GraphHandle::instantiate(spec, Window { basepoint, radius: self.radius })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RayFile {
    pub schema_version: String,
    pub ray: Ray,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyFile {
    pub schema_version: String,
    pub rays: Vec<Ray>,
    pub schedule: Vec<u32>,
    pub separations: Vec<Vec<u32>>,
}

impl FamilyFile {
    pub fn from_family(f: &RayFamily) -> FamilyFile {
        FamilyFile {
            schema_version: SCHEMA_VERSION.into(),
            rays: f.rays.clone(),
            schedule: f.schedule.clone(),
            separations: f.separations.clone(),
        }
    }

    pub fn to_family(&self) -> RayFamily {
        RayFamily {
            rays: self.rays.clone(),
            schedule: self.schedule.clone(),
            separations: self.separations.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: String,
    #[serde(flatten)]
    pub model: MinorModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mode {
    Kfat { k: u32 },
    Ultrafat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationClaims {
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fatness: Option<FatnessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ultrafat: Option<UltraFatTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graded: Option<GradedReport>,
    /// level every ultra-fat row is claimed to pass up to
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ultrafat_level: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConnectorFile {
    pub pair: u32,
    pub path: Vec<VertexId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HexPathFile {
    pub pair: u32,
    pub rung: u32,
    pub connector: usize,
    pub path: Vec<VertexId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub schema_version: String,
    pub tool_version: String,
    pub seed: u64,
    pub graph: GraphDescriptor,
    pub mode: Mode,
    pub target_rows: u32,
    pub target_cols: u32,
    pub schedule: Vec<u32>,
    pub family: FamilyFile,
    pub connectors: Vec<ConnectorFile>,
    pub hex_horizontals: Vec<HexPathFile>,
    pub clauses: ClauseReport,
    pub model: MinorModel,
    pub verification: VerificationClaims,
}

impl Certificate {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Certificate> {
        let cert: Certificate = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        if cert.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported schema version {}",
                cert.schema_version
            )));
        }
        Ok(cert)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Verified,
    Refuted { witness: String },
    Indeterminate { reason: String },
}

/// Re-instantiate the graph from the descriptor and recompute every claim of
/// the certificate from scratch.
pub fn check_certificate(cert: &Certificate) -> Result<Verdict> {
    let g = cert.graph.instantiate()?;
    let m = &cert.model;

    let validity = validate_model(&g, m);
    if let Some(v) = validity.indeterminate {
        return Ok(Verdict::Indeterminate { reason: format!("vertex {v} outside the window") });
    }
    if !validity.valid {
        let v = validity.violation.unwrap();
        return Ok(Verdict::Refuted {
            witness: format!("validity clause `{}`: {}", v.clause, v.detail),
        });
    }
    if !cert.verification.valid {
        return Ok(Verdict::Refuted {
            witness: "certificate claims invalidity of a valid model".into(),
        });
    }

    match cert.mode {
        Mode::Kfat { k } => {
            let matrix = distance_matrix(&g, m, ExecMode::default_mode())?;
            let mut undecided = None;
            for i in 0..matrix.elements.len() {
                for j in i + 1..matrix.elements.len() {
                    if MinorModel::exempt(&matrix.elements[i], &matrix.elements[j]) {
                        continue;
                    }
                    let d = matrix.get(i, j);
                    if d.less_than(k) {
                        return Ok(Verdict::Refuted {
                            witness: format!(
                                "pair ({}, {}) at distance {} < {k}",
                                matrix.elements[i],
                                matrix.elements[j],
                                d.window_dist.unwrap()
                            ),
                        });
                    }
                    if !d.at_least(k) {
                        undecided = Some(format!(
                            "pair ({}, {}) only bounded below by {} inside the window",
                            matrix.elements[i], matrix.elements[j], d.lower_bound
                        ));
                    }
                }
            }
            if let Some(reason) = undecided {
                return Ok(Verdict::Indeterminate { reason });
            }
            // claimed achieved value must not exceed what we can prove
            if let Some(rep) = &cert.verification.fatness {
                if let Some(claimed) = rep.achieved {
                    if claimed < k {
                        return Ok(Verdict::Refuted {
                            witness: format!("certificate claims fatness {claimed} < K = {k}"),
                        });
                    }
                }
            }
            Ok(Verdict::Verified)
        }
        Mode::Ultrafat => {
            let level = cert
                .verification
                .ultrafat_level
                .ok_or_else(|| Error::Schema("ultrafat certificate without level".into()))?;
            let table = crate::model::ultrafat_table(&g, m, level)?;
            for row in &table.rows {
                if !row.pass {
                    if let Some((a, b, d)) = &row.witness {
                        return Ok(Verdict::Refuted {
                            witness: format!(
                                "submodel at level {} has pair ({a}, {b}) at distance {d}",
                                row.k
                            ),
                        });
                    }
                    if !row.exact {
                        return Ok(Verdict::Indeterminate {
                            reason: format!("level {} not decidable inside the window", row.k),
                        });
                    }
                    return Ok(Verdict::Refuted {
                        witness: format!("submodel at level {} is not {}-fat", row.k, row.k),
                    });
                }
                if !row.exact && row.min_observed.map(|d| d < row.k).unwrap_or(false) {
                    return Ok(Verdict::Indeterminate {
                        reason: format!("level {} only bounded inside the window", row.k),
                    });
                }
            }
            Ok(Verdict::Verified)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptor_roundtrip() {
        let spec = GeneratorSpec::parse_compact("example42:K=3").unwrap();
        let w = Window { basepoint: VertexId::Tee { i: 0 }, radius: 5 };
        let d = GraphDescriptor::new(&spec, &w);
        let g = d.instantiate().unwrap();
        assert_eq!(g.spec().name(), "example42");
        let j = serde_json::to_string(&d).unwrap();
        let d2: GraphDescriptor = serde_json::from_str(&j).unwrap();
        assert_eq!(d2.params["K"], 3);
    }

    #[test]
    fn explicit_descriptor_roundtrip() {
        let spec = GeneratorSpec::explicit(&[
            (VertexId::Named("a".into()), VertexId::Named("b".into())),
        ]);
        let w = Window { basepoint: VertexId::Named("a".into()), radius: 4 };
        let d = GraphDescriptor::new(&spec, &w);
        let g = d.instantiate().unwrap();
        assert_eq!(g.vertex_count(), 2);
    }
}

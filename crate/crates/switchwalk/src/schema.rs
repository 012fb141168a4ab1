//! Versioned JSON file formats.
//!
//! Every file carries a top-level `schema_version`; unknown fields are
//! rejected. Matrices are row-major nested arrays of numbers. Certificate
//! tables are keyed by vertex (`"1"`) and by edge (`"1,2"`), so published
//! λ/μ estimates can be injected verbatim instead of computed.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::certificates::{CertificateError, SubsystemFamily, SubsystemMatrix};
use crate::digraph::{DigraphError, SwitchingDigraph};
use crate::random_synth::{Phi, RandomGraphModel};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("unsupported schema_version {0}, expected {SCHEMA_VERSION}")]
    UnsupportedVersion(u32),
    #[error("malformed key {0:?}: expected \"i\" or \"i,j\" with integer labels")]
    BadKey(String),
    #[error("matrix for subsystem {0} is not rectangular")]
    RaggedMatrix(usize),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Digraph(#[from] DigraphError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
}

fn check_version(version: u32) -> Result<(), SchemaError> {
    if version == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(SchemaError::UnsupportedVersion(version))
    }
}

fn parse_vertex_key(key: &str) -> Result<usize, SchemaError> {
    key.trim()
        .parse()
        .map_err(|_| SchemaError::BadKey(key.to_string()))
}

fn parse_edge_key(key: &str) -> Result<(usize, usize), SchemaError> {
    let mut parts = key.split(',');
    let bad = || SchemaError::BadKey(key.to_string());
    let i = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    let j = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok((i, j))
}

/// `input.json`: the subsystem family, admissible transitions, and an
/// optional injected certificate table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputFile {
    pub schema_version: u32,
    pub subsystems: Vec<SubsystemEntry>,
    pub edges: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificates: Option<CertificateTable>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemEntry {
    pub index: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
}

/// Injected `λ`/`μ` estimates, keyed `"i"` and `"i,j"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateTable {
    pub lambda: BTreeMap<String, f64>,
    pub mu: BTreeMap<String, f64>,
}

impl InputFile {
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let file: Self = serde_json::from_str(text)?;
        check_version(file.schema_version)?;
        Ok(file)
    }

    pub fn family(&self) -> Result<SubsystemFamily, SchemaError> {
        let mut subs = Vec::with_capacity(self.subsystems.len());
        for entry in &self.subsystems {
            let rows = entry.a.len();
            let cols = entry.a.first().map(Vec::len).unwrap_or(0);
            if entry.a.iter().any(|r| r.len() != cols) {
                return Err(SchemaError::RaggedMatrix(entry.index));
            }
            let flat: Vec<f64> = entry.a.concat();
            let matrix = nalgebra::DMatrix::from_row_slice(rows, cols, &flat);
            subs.push(SubsystemMatrix::new(entry.index, matrix)?);
        }
        Ok(SubsystemFamily::new(subs)?)
    }

    /// Builds the switching digraph: from the injected table when present,
    /// otherwise from certificates computed at the given margin.
    pub fn digraph(&self, margin: f64) -> Result<SwitchingDigraph, SchemaError> {
        match &self.certificates {
            Some(table) => {
                let lambda = table
                    .lambda
                    .iter()
                    .map(|(k, &v)| Ok((parse_vertex_key(k)?, v)))
                    .collect::<Result<BTreeMap<_, _>, SchemaError>>()?;
                let mu = table
                    .mu
                    .iter()
                    .map(|(k, &v)| Ok((parse_edge_key(k)?, v)))
                    .collect::<Result<BTreeMap<_, _>, SchemaError>>()?;
                Ok(SwitchingDigraph::build_with_weights(
                    &lambda,
                    &mu,
                    &self.edges,
                )?)
            }
            None => {
                let family = self.family()?;
                Ok(SwitchingDigraph::build(&family, &self.edges, margin)?)
            }
        }
    }
}

/// `digraph.json`: vertices, the stable/unstable partition, vertex
/// weights keyed by vertex, and weighted edges.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DigraphFile {
    pub schema_version: u32,
    pub vertices: Vec<usize>,
    pub stable: Vec<usize>,
    pub unstable: Vec<usize>,
    pub vertex_weights: BTreeMap<String, f64>,
    pub edges: Vec<EdgeEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

impl DigraphFile {
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let file: Self = serde_json::from_str(text)?;
        check_version(file.schema_version)?;
        Ok(file)
    }

    pub fn from_digraph(g: &SwitchingDigraph) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            vertices: g.vertices().to_vec(),
            stable: g.stable().iter().copied().collect(),
            unstable: g.unstable().iter().copied().collect(),
            vertex_weights: g
                .vertices()
                .iter()
                .map(|&v| (v.to_string(), g.vertex_weight(v).unwrap()))
                .collect(),
            edges: g
                .edges()
                .iter()
                .map(|&(from, to)| EdgeEntry {
                    from,
                    to,
                    weight: g.edge_weight(from, to).unwrap(),
                })
                .collect(),
        }
    }

    pub fn to_digraph(&self) -> Result<SwitchingDigraph, SchemaError> {
        let mut stable = BTreeMap::new();
        let mut unstable = BTreeMap::new();
        for (key, &w) in &self.vertex_weights {
            let v = parse_vertex_key(key)?;
            match (self.stable.contains(&v), self.unstable.contains(&v)) {
                (true, false) => stable.insert(v, w),
                (false, true) => unstable.insert(v, w),
                _ => {
                    return Err(SchemaError::BadKey(format!(
                        "vertex {v} must appear in exactly one of stable/unstable"
                    )))
                }
            };
        }
        if stable.len() + unstable.len() != self.vertices.len() {
            return Err(SchemaError::BadKey(
                "vertex_weights must cover exactly the vertex list".into(),
            ));
        }
        let edges: Vec<((usize, usize), f64)> = self
            .edges
            .iter()
            .map(|e| ((e.from, e.to), e.weight))
            .collect();
        Ok(SwitchingDigraph::from_parts(&stable, &unstable, &edges)?)
    }
}

/// `result.json`: what a synthesis run produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub schema_version: u32,
    pub method: String,
    /// `"contractive"` or `"none-exists"`.
    pub status: String,
    /// Closed walk as its vertex array, when one was found.
    pub walk: Option<Vec<usize>>,
    pub xi_bar: Option<f64>,
    /// Contractivity probability bound (randomized method only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

impl ResultFile {
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let file: Self = serde_json::from_str(text)?;
        check_version(file.schema_version)?;
        Ok(file)
    }
}

/// `model.json`: the nicely-connected / nicely-weighted experiment model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    pub stable_count: usize,
    pub unstable_count: usize,
    pub phi: Phi,
    pub edge_bound: f64,
    pub vertex_bound: f64,
    pub edge_mean: f64,
    pub vertex_mean: f64,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let file: Self = serde_json::from_str(text)?;
        check_version(file.schema_version)?;
        Ok(file)
    }

    pub fn to_model(&self) -> RandomGraphModel {
        RandomGraphModel {
            stable_count: self.stable_count,
            unstable_count: self.unstable_count,
            phi: self.phi,
            edge_bound: self.edge_bound,
            vertex_bound: self.vertex_bound,
            edge_mean: self.edge_mean,
            vertex_mean: self.vertex_mean,
        }
    }

    pub fn from_model(model: &RandomGraphModel) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            stable_count: model.stable_count,
            unstable_count: model.unstable_count,
            phi: model.phi,
            edge_bound: model.edge_bound,
            vertex_bound: model.vertex_bound,
            edge_mean: model.edge_mean,
            vertex_mean: model.vertex_mean,
        }
    }
}

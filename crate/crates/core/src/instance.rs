//! On-disk truss instance format.
//!
//! A JSON document with a stable schema: nodes, members, dead and reference
//! loads, yield stress, volume budget and the initial areas. Designs reuse
//! the same schema through `initial_areas_mm2`, so an optimized design can be
//! fed back into any command. Serialization preserves `f64` values exactly
//! (shortest round-trip form), making export/import lossless.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Design, GroundStructure, ModelError, Node, PointLoad};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("instance invalid: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NodeSpec {
    pub id: usize,
    pub x_mm: f64,
    pub y_mm: f64,
    #[serde(default)]
    pub fixed_x: bool,
    #[serde(default)]
    pub fixed_y: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MemberSpec {
    pub id: usize,
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LoadSpec {
    pub node: usize,
    #[serde(rename = "fx_N", default)]
    pub fx_n: f64,
    #[serde(rename = "fy_N", default)]
    pub fy_n: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct LoadsSpec {
    #[serde(default)]
    pub dead: Vec<LoadSpec>,
    #[serde(default)]
    pub reference: Vec<LoadSpec>,
}

/// Root document of the instance schema.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Instance {
    pub nodes: Vec<NodeSpec>,
    pub members: Vec<MemberSpec>,
    pub loads: LoadsSpec,
    pub yield_stress_mpa: f64,
    pub volume_budget_mm3: f64,
    pub initial_areas_mm2: Vec<f64>,
}

impl Instance {
    /// Captures a ground structure and design into the file schema.
    pub fn from_parts(gs: &GroundStructure, design: &Design) -> Self {
        let nodes = gs
            .nodes()
            .iter()
            .map(|n| NodeSpec {
                id: n.id,
                x_mm: n.x,
                y_mm: n.y,
                fixed_x: n.fixed_x,
                fixed_y: n.fixed_y,
            })
            .collect();
        let members = gs
            .members()
            .iter()
            .map(|m| MemberSpec {
                id: m.id,
                a: m.node_a,
                b: m.node_b,
            })
            .collect();
        let collect_loads = |vector: &[f64]| -> Vec<LoadSpec> {
            let mut out = Vec::new();
            for n in gs.nodes() {
                let [dx, dy] = gs.dof_of(n.id);
                let fx = dx.map_or(0.0, |d| vector[d]);
                let fy = dy.map_or(0.0, |d| vector[d]);
                if fx != 0.0 || fy != 0.0 {
                    out.push(LoadSpec {
                        node: n.id,
                        fx_n: fx,
                        fy_n: fy,
                    });
                }
            }
            out
        };
        Instance {
            nodes,
            members,
            loads: LoadsSpec {
                dead: collect_loads(gs.dead_load()),
                reference: collect_loads(gs.reference_load()),
            },
            yield_stress_mpa: gs.yield_stress(),
            volume_budget_mm3: design.volume_budget,
            initial_areas_mm2: design.areas.clone(),
        }
    }

    /// Reconstructs the ground structure and initial design.
    pub fn into_parts(&self) -> Result<(GroundStructure, Design), InstanceError> {
        let mut nodes: Vec<NodeSpec> = self.nodes.clone();
        nodes.sort_by_key(|n| n.id);
        let nodes: Vec<Node> = nodes
            .iter()
            .map(|n| Node {
                id: n.id,
                x: n.x_mm,
                y: n.y_mm,
                fixed_x: n.fixed_x,
                fixed_y: n.fixed_y,
            })
            .collect();

        let mut members = self.members.clone();
        members.sort_by_key(|m| m.id);
        for (i, m) in members.iter().enumerate() {
            if m.id != i {
                return Err(InstanceError::Invalid(format!(
                    "member ids must be dense from 0; found {}",
                    m.id
                )));
            }
        }
        let ends: Vec<(usize, usize)> = members.iter().map(|m| (m.a, m.b)).collect();

        let to_point = |l: &LoadSpec| PointLoad {
            node: l.node,
            fx: l.fx_n,
            fy: l.fy_n,
        };
        let dead: Vec<PointLoad> = self.loads.dead.iter().map(to_point).collect();
        let reference: Vec<PointLoad> = self.loads.reference.iter().map(to_point).collect();

        let gs = GroundStructure::new(nodes, &ends, &dead, &reference, self.yield_stress_mpa)?;
        if self.initial_areas_mm2.len() != gs.member_count() {
            return Err(InstanceError::Invalid(format!(
                "{} initial areas for {} members",
                self.initial_areas_mm2.len(),
                gs.member_count()
            )));
        }
        if !(self.volume_budget_mm3 > 0.0) {
            return Err(InstanceError::Invalid(
                "volume budget must be positive".into(),
            ));
        }
        let design = Design::new(self.initial_areas_mm2.clone(), self.volume_budget_mm3);
        Ok((gs, design))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }

    pub fn parse(text: &str) -> Result<Self, InstanceError> {
        serde_json::from_str(text).map_err(|e| InstanceError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn read_file(path: &str) -> Result<Self, InstanceError> {
        let text = std::fs::read_to_string(path).map_err(|source| InstanceError::Io {
            path: path.to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn write_file(&self, path: &str) -> Result<(), InstanceError> {
        std::fs::write(path, self.to_json()).map_err(|source| InstanceError::Io {
            path: path.to_string(),
            source,
        })
    }

    /// Stable content digest (FNV-1a over the canonical JSON form).
    pub fn digest(&self) -> String {
        let json = self.to_json();
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in json.as_bytes() {
            hash ^= u64::from(*byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{hash:016x}")
    }
}

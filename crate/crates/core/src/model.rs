//! Truss ground structures, designs and damage scenarios.
//!
//! Internal units are newtons, millimetres and megapascals, so that
//! `yield_stress * area` is directly a force in newtons and load factors are
//! dimensionless.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("node ids must be unique and dense from 0")]
    BadNodeIds,
    #[error("non-finite node position on node {0}")]
    NonFinitePosition(usize),
    #[error("member {0} references unknown node")]
    UnknownNode(usize),
    #[error("member {0} has coincident endpoints")]
    ZeroLengthMember(usize),
    #[error("members {0} and {1} connect the same node pair")]
    DuplicateMember(usize, usize),
    #[error("member ids must be unique and dense from 0")]
    BadMemberIds,
    #[error("load applied to fixed direction or unknown node {0}")]
    BadLoad(usize),
    #[error("yield stress must be positive")]
    BadYieldStress,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid damage scenario: {0}")]
    BadScenario(String),
}

/// A pin joint. Fixed directions carry no displacement degree of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: usize,
    /// Position in mm.
    pub x: f64,
    pub y: f64,
    pub fixed_x: bool,
    pub fixed_y: bool,
}

/// A straight bar between two nodes. Length and direction cosines are derived
/// from the node positions at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub id: usize,
    pub node_a: usize,
    pub node_b: usize,
    /// Undeformed length in mm.
    pub length: f64,
    /// Unit direction from `node_a` to `node_b`.
    pub cos_x: f64,
    pub cos_y: f64,
}

/// A point load in newtons applied to one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointLoad {
    pub node: usize,
    pub fx: f64,
    pub fy: f64,
}

/// Immutable truss instance: geometry, supports, loads and material.
#[derive(Debug, Clone)]
pub struct GroundStructure {
    nodes: Vec<Node>,
    members: Vec<Member>,
    /// Constant part of the load, length `dof_count`, N.
    dead_load: Vec<f64>,
    /// Proportionally scaled part of the load, length `dof_count`, N.
    reference_load: Vec<f64>,
    /// Yield stress, MPa.
    yield_stress: f64,
    /// Per node, the free-DOF index of its x and y directions.
    dof_of: Vec<[Option<usize>; 2]>,
    dof_count: usize,
}

impl GroundStructure {
    pub fn new(
        nodes: Vec<Node>,
        member_ends: &[(usize, usize)],
        dead: &[PointLoad],
        reference: &[PointLoad],
        yield_stress: f64,
    ) -> Result<Self, ModelError> {
        if !(yield_stress > 0.0) {
            return Err(ModelError::BadYieldStress);
        }
        for (i, n) in nodes.iter().enumerate() {
            if n.id != i {
                return Err(ModelError::BadNodeIds);
            }
            if !n.x.is_finite() || !n.y.is_finite() {
                return Err(ModelError::NonFinitePosition(n.id));
            }
        }

        let mut members = Vec::with_capacity(member_ends.len());
        for (id, &(a, b)) in member_ends.iter().enumerate() {
            if a >= nodes.len() || b >= nodes.len() {
                return Err(ModelError::UnknownNode(id));
            }
            let dx = nodes[b].x - nodes[a].x;
            let dy = nodes[b].y - nodes[a].y;
            let length = (dx * dx + dy * dy).sqrt();
            if length <= 0.0 {
                return Err(ModelError::ZeroLengthMember(id));
            }
            members.push(Member {
                id,
                node_a: a,
                node_b: b,
                length,
                cos_x: dx / length,
                cos_y: dy / length,
            });
        }
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                let (a1, b1) = (members[i].node_a, members[i].node_b);
                let (a2, b2) = (members[j].node_a, members[j].node_b);
                if (a1, b1) == (a2, b2) || (a1, b1) == (b2, a2) {
                    return Err(ModelError::DuplicateMember(i, j));
                }
            }
        }

        let mut dof_of = vec![[None, None]; nodes.len()];
        let mut dof_count = 0;
        for n in &nodes {
            if !n.fixed_x {
                dof_of[n.id][0] = Some(dof_count);
                dof_count += 1;
            }
            if !n.fixed_y {
                dof_of[n.id][1] = Some(dof_count);
                dof_count += 1;
            }
        }

        let assemble = |loads: &[PointLoad]| -> Result<Vec<f64>, ModelError> {
            let mut v = vec![0.0; dof_count];
            for l in loads {
                if l.node >= nodes.len() {
                    return Err(ModelError::BadLoad(l.node));
                }
                if l.fx != 0.0 {
                    let Some(d) = dof_of[l.node][0] else {
                        return Err(ModelError::BadLoad(l.node));
                    };
                    v[d] += l.fx;
                }
                if l.fy != 0.0 {
                    let Some(d) = dof_of[l.node][1] else {
                        return Err(ModelError::BadLoad(l.node));
                    };
                    v[d] += l.fy;
                }
            }
            Ok(v)
        };
        let dead_load = assemble(dead)?;
        let reference_load = assemble(reference)?;

        Ok(GroundStructure {
            nodes,
            members,
            dead_load,
            reference_load,
            yield_stress,
            dof_of,
            dof_count,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn dof_count(&self) -> usize {
        self.dof_count
    }

    pub fn dead_load(&self) -> &[f64] {
        &self.dead_load
    }

    pub fn reference_load(&self) -> &[f64] {
        &self.reference_load
    }

    pub fn yield_stress(&self) -> f64 {
        self.yield_stress
    }

    /// Free-DOF indices `(x, y)` of a node; `None` on fixed directions.
    pub fn dof_of(&self, node: usize) -> [Option<usize>; 2] {
        self.dof_of[node]
    }

    /// Member lengths in mm; the cost vector of the volume constraint.
    pub fn member_lengths(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.length).collect()
    }

    /// One equilibrium column per member: the unit direction `e` from end `a`
    /// to end `b` placed with sign `-e` on `a`'s free DOFs and `+e` on `b`'s.
    /// A member force vector `q` equilibrates the nodal loads `p` when
    /// `sum_i q_i b_i = p`.
    pub fn equilibrium_columns(&self) -> Vec<Vec<f64>> {
        self.members
            .iter()
            .map(|mem| {
                let mut col = vec![0.0; self.dof_count];
                let [ax, ay] = self.dof_of[mem.node_a];
                let [bx, by] = self.dof_of[mem.node_b];
                if let Some(d) = ax {
                    col[d] -= mem.cos_x;
                }
                if let Some(d) = ay {
                    col[d] -= mem.cos_y;
                }
                if let Some(d) = bx {
                    col[d] += mem.cos_x;
                }
                if let Some(d) = by {
                    col[d] += mem.cos_y;
                }
                col
            })
            .collect()
    }

    /// Structural volume `sum_i length_i * area_i` in mm³.
    pub fn volume(&self, areas: &[f64]) -> f64 {
        assert_eq!(areas.len(), self.members.len(), "area vector length");
        self.members
            .iter()
            .zip(areas)
            .map(|(m, a)| m.length * a)
            .sum()
    }
}

/// Member cross-sectional areas with the volume budget they must respect.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    /// Areas in mm².
    pub areas: Vec<f64>,
    /// Volume budget in mm³.
    pub volume_budget: f64,
}

impl Design {
    pub fn new(areas: Vec<f64>, volume_budget: f64) -> Self {
        Design {
            areas,
            volume_budget,
        }
    }

    /// Feasibility of `areas >= 0` and the volume budget, with a small
    /// relative slack on the budget.
    pub fn is_feasible(&self, gs: &GroundStructure) -> bool {
        self.areas.iter().all(|&a| a >= -1e-12)
            && gs.volume(&self.areas) <= self.volume_budget * (1.0 + 1e-9)
    }
}

/// A damage scenario: the set of damaged members plus the damage degree.
/// `gamma = 0` removes a damaged member entirely; `gamma` in `(0, 1)` leaves
/// the fraction `gamma` of its cross-section.
#[derive(Debug, Clone, PartialEq)]
pub struct DamageScenario {
    damaged: Vec<usize>,
    gamma: f64,
}

impl DamageScenario {
    pub fn new(mut damaged: Vec<usize>, gamma: f64, member_count: usize) -> Result<Self, ModelError> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(ModelError::BadScenario(format!(
                "damage degree {gamma} outside [0, 1)"
            )));
        }
        damaged.sort_unstable();
        damaged.dedup();
        if let Some(&worst) = damaged.iter().find(|&&i| i >= member_count) {
            return Err(ModelError::BadScenario(format!(
                "damaged member {worst} out of range"
            )));
        }
        Ok(DamageScenario { damaged, gamma })
    }

    /// Intact scenario.
    pub fn nominal(gamma: f64) -> Self {
        DamageScenario {
            damaged: Vec::new(),
            gamma,
        }
    }

    /// Sorted damaged member ids.
    pub fn damaged(&self) -> &[usize] {
        &self.damaged
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn damage_count(&self) -> usize {
        self.damaged.len()
    }
}

/// Realized areas of `areas` under scenario `s`: component `i` becomes
/// `gamma * areas[i]` when damaged and stays `areas[i]` otherwise.
pub fn apply_scenario(areas: &[f64], s: &DamageScenario) -> Vec<f64> {
    let mut out = areas.to_vec();
    for &i in s.damaged() {
        out[i] *= s.gamma();
    }
    out
}

/// The two built-in load cases of the bundled 19-member cantilever truss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleId {
    I,
    II,
}

impl std::str::FromStr for ExampleId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "I" | "i" | "1" => Ok(ExampleId::I),
            "II" | "ii" | "2" => Ok(ExampleId::II),
            other => Err(format!("unknown example {other:?} (expected I or II)")),
        }
    }
}

impl std::fmt::Display for ExampleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExampleId::I => write!(f, "I"),
            ExampleId::II => write!(f, "II"),
        }
    }
}

/// Builds one of the two bundled example instances.
///
/// Both share the same cantilever ground structure: a 2 x 4 grid of nodes with
/// spacing 1000 mm, the two leftmost nodes fully fixed, 19 members (6 chords,
/// 3 verticals, 6 single-bay diagonals, 4 two-bay diagonals) and a yield
/// stress of 200 MPa. The initial design has every area at 1000 mm² and the
/// volume budget equal to that design's volume.
///
/// Example I carries a dead load of 50 kN pulling horizontally at each of the
/// two rightmost nodes and a vertical reference load of 10 kN at the upper
/// rightmost node. Example II has no dead load and a reference load of 50 kN
/// pulling horizontally at each of the two rightmost nodes.
///
/// On the uniform initial design the two vertical orientations of the
/// reference load are equivalent (the ground structure is mirror-symmetric),
/// so the orientation is pinned by the optimized worst case instead: only the
/// upward orientation admits designs reaching the documented optimum.
pub fn builtin_example(id: ExampleId) -> (GroundStructure, Design) {
    const L: f64 = 1000.0;
    let mut nodes = Vec::new();
    for i in 0..4 {
        for j in 0..2 {
            let fixed = i == 0;
            nodes.push(Node {
                id: nodes.len(),
                x: i as f64 * L,
                y: j as f64 * L,
                fixed_x: fixed,
                fixed_y: fixed,
            });
        }
    }
    // Node ids: column-major, so (column i, row j) -> 2 i + j.
    // Member order: bottom chords, top chords, verticals, single-bay
    // diagonals (rising then falling per bay), two-bay diagonals (rising
    // then falling, left to right).
    let members: Vec<(usize, usize)> = vec![
        (0, 2),
        (2, 4),
        (4, 6),
        (1, 3),
        (3, 5),
        (5, 7),
        (2, 3),
        (4, 5),
        (6, 7),
        (0, 3),
        (1, 2),
        (2, 5),
        (3, 4),
        (4, 7),
        (5, 6),
        (0, 5),
        (1, 4),
        (2, 7),
        (3, 6),
    ];

    let kn = 1000.0;
    let (dead, reference): (Vec<PointLoad>, Vec<PointLoad>) = match id {
        ExampleId::I => (
            vec![
                PointLoad {
                    node: 6,
                    fx: 50.0 * kn,
                    fy: 0.0,
                },
                PointLoad {
                    node: 7,
                    fx: 50.0 * kn,
                    fy: 0.0,
                },
            ],
            vec![PointLoad {
                node: 7,
                fx: 0.0,
                fy: 10.0 * kn,
            }],
        ),
        ExampleId::II => (
            Vec::new(),
            vec![
                PointLoad {
                    node: 6,
                    fx: 50.0 * kn,
                    fy: 0.0,
                },
                PointLoad {
                    node: 7,
                    fx: 50.0 * kn,
                    fy: 0.0,
                },
            ],
        ),
    };

    let gs = GroundStructure::new(nodes, &members, &dead, &reference, 200.0)
        .expect("built-in example must be valid");
    let areas = vec![1000.0; gs.member_count()];
    let budget = gs.volume(&areas);
    let design = Design::new(areas, budget);
    (gs, design)
}

//! Plastic limit analysis of planar trusses and maximization of the
//! worst-case limit load factor when an unknown subset of members may be
//! damaged.
//!
//! The crate is organized around a small pipeline:
//!
//! * [`model`] — ground structures, designs, damage scenarios and the two
//!   bundled example instances;
//! * [`lp`] — the dense simplex kernel behind every limit analysis;
//! * [`limit`] — lower-bound limit analysis and classical limit design;
//! * [`worstcase`] — exact worst-case evaluation over damage scenarios and
//!   the strong-redundancy measure;
//! * [`dfo`] — stencil sampling on the volume plane and the least-squares
//!   stencil gradient;
//! * [`qp`] — the convex subproblem that produces search directions;
//! * [`sqp`] — the derivative-free optimizer driving it all;
//! * [`instance`] — the on-disk instance format;
//! * [`oracle`] — brute-force reference solvers used by the test suites.

pub mod dfo;
pub mod instance;
pub mod limit;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod qp;
pub mod sqp;
pub mod worstcase;

pub use limit::{classical_limit_design, limit_load_factor, LimitResult, LimitStatus};
pub use model::{
    apply_scenario, builtin_example, DamageScenario, Design, ExampleId, GroundStructure, Member,
    Node, PointLoad,
};
pub use sqp::{SqpConfig, SqpOutcome, Termination};
pub use worstcase::{
    strong_redundancy, worst_case, worst_case_oracle, StrongRedundancy, WorstCaseResult,
};

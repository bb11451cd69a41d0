//! Lower-bound limit analysis and the classical limit design.
//!
//! The limit load factor of a design is the optimum of
//!
//! ```text
//!     maximize   lambda
//!     subject to sum_i q_i b_i = lambda * p_r + p_d
//!                |q_i| <= yield_stress * area_i
//! ```
//!
//! over the load factor and the member axial forces. An infeasible program
//! means the dead load cannot be equilibrated at all (a mechanism, or member
//! capacities below the dead load); that case is reported with a `-inf`
//! sentinel so that worst-case minimization over damage scenarios stays well
//! ordered.

use crate::lp::{solve_lp, LpProblem, LpStatus};
use crate::model::{Design, GroundStructure, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitStatus {
    Optimal,
    /// The dead load cannot be carried: unstable or overloaded structure.
    MechanismOrOverload,
    /// The reference load direction is unconstrained (e.g. `p_r = 0`).
    Unbounded,
}

/// Outcome of a limit analysis. `lambda` is `-inf` on
/// `MechanismOrOverload` and `+inf` on `Unbounded`; `forces` carries the
/// member axial forces (N, tension positive) only at an optimum.
#[derive(Debug, Clone)]
pub struct LimitResult {
    pub status: LimitStatus,
    pub lambda: f64,
    pub forces: Option<Vec<f64>>,
}

/// Area below which a member is treated as having zero capacity. The member
/// stays in the program so dimensions remain fixed across damage scenarios.
pub const CAPACITY_ZERO_AREA: f64 = 1e-12;

/// Largest load factor the given areas can carry under the structure's loads.
pub fn limit_load_factor(gs: &GroundStructure, areas: &[f64]) -> Result<LimitResult, ModelError> {
    let m = gs.member_count();
    if areas.len() != m {
        return Err(ModelError::Dimension(format!(
            "{} areas for {} members",
            areas.len(),
            m
        )));
    }
    let d = gs.dof_count();
    let columns = gs.equilibrium_columns();
    let sigma = gs.yield_stress();

    // Variables: [lambda, q_1 .. q_m].
    let mut rows = vec![vec![0.0; m + 1]; d];
    for i in 0..d {
        rows[i][0] = -gs.reference_load()[i];
        for (j, col) in columns.iter().enumerate() {
            rows[i][j + 1] = col[i];
        }
    }
    let mut objective = vec![0.0; m + 1];
    objective[0] = 1.0;
    let mut lower = vec![f64::NEG_INFINITY; m + 1];
    let mut upper = vec![f64::INFINITY; m + 1];
    for (j, &a) in areas.iter().enumerate() {
        let cap = if a > CAPACITY_ZERO_AREA { sigma * a } else { 0.0 };
        lower[j + 1] = -cap;
        upper[j + 1] = cap;
    }

    let lp = LpProblem {
        objective,
        rows,
        rhs: gs.dead_load().to_vec(),
        lower,
        upper,
    };
    let sol = solve_lp(&lp).map_err(|e| ModelError::Dimension(format!("limit LP failed: {e}")))?;
    Ok(match sol.status {
        LpStatus::Optimal => LimitResult {
            status: LimitStatus::Optimal,
            lambda: sol.objective,
            forces: Some(sol.primal[1..].to_vec()),
        },
        LpStatus::Infeasible => LimitResult {
            status: LimitStatus::MechanismOrOverload,
            lambda: f64::NEG_INFINITY,
            forces: None,
        },
        LpStatus::Unbounded => LimitResult {
            status: LimitStatus::Unbounded,
            lambda: f64::INFINITY,
            forces: None,
        },
    })
}

#[derive(Debug, thiserror::Error)]
pub enum LimitDesignError {
    #[error("limit design program is infeasible")]
    Infeasible,
    #[error("limit design program is unbounded")]
    Unbounded,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Optimal plastic design: maximizes the limit load factor over both the
/// member forces and the areas under the volume budget.
///
/// Solved as a single linear program in `(lambda, q, x)` with the yield
/// inequalities `|q_i| <= yield_stress * x_i` rewritten through slacks.
pub fn classical_limit_design(
    gs: &GroundStructure,
    volume_budget: f64,
) -> Result<(Design, f64), LimitDesignError> {
    if !(volume_budget > 0.0) {
        return Err(LimitDesignError::Model(ModelError::Dimension(
            "volume budget must be positive".into(),
        )));
    }
    let m = gs.member_count();
    let d = gs.dof_count();
    let columns = gs.equilibrium_columns();
    let sigma = gs.yield_stress();
    let lengths = gs.member_lengths();

    // Variables: [lambda | q (m) | x (m) | u (m) | w (m) | v], where
    //   q_i - sigma x_i + u_i = 0,
    //  -q_i - sigma x_i + w_i = 0,
    //   c.x + v = volume_budget.
    let n = 2 + 4 * m;
    let iq = |i: usize| 1 + i;
    let ix = |i: usize| 1 + m + i;
    let iu = |i: usize| 1 + 2 * m + i;
    let iw = |i: usize| 1 + 3 * m + i;
    let iv = n - 1;

    let mut rows = Vec::with_capacity(d + 2 * m + 1);
    let mut rhs = Vec::with_capacity(d + 2 * m + 1);
    for i in 0..d {
        let mut row = vec![0.0; n];
        row[0] = -gs.reference_load()[i];
        for (j, col) in columns.iter().enumerate() {
            row[iq(j)] = col[i];
        }
        rows.push(row);
        rhs.push(gs.dead_load()[i]);
    }
    for j in 0..m {
        let mut row = vec![0.0; n];
        row[iq(j)] = 1.0;
        row[ix(j)] = -sigma;
        row[iu(j)] = 1.0;
        rows.push(row);
        rhs.push(0.0);

        let mut row = vec![0.0; n];
        row[iq(j)] = -1.0;
        row[ix(j)] = -sigma;
        row[iw(j)] = 1.0;
        rows.push(row);
        rhs.push(0.0);
    }
    let mut row = vec![0.0; n];
    for j in 0..m {
        row[ix(j)] = lengths[j];
    }
    row[iv] = 1.0;
    rows.push(row);
    rhs.push(volume_budget);

    let mut objective = vec![0.0; n];
    objective[0] = 1.0;
    let mut lower = vec![0.0; n];
    let upper = vec![f64::INFINITY; n];
    lower[0] = f64::NEG_INFINITY;
    for j in 0..m {
        lower[iq(j)] = f64::NEG_INFINITY;
    }

    let lp = LpProblem {
        objective,
        rows,
        rhs,
        lower,
        upper,
    };
    let sol = solve_lp(&lp)
        .map_err(|e| LimitDesignError::Model(ModelError::Dimension(format!("design LP: {e}"))))?;
    match sol.status {
        LpStatus::Optimal => {
            let areas: Vec<f64> = (0..m).map(|j| sol.primal[ix(j)].max(0.0)).collect();
            Ok((Design::new(areas, volume_budget), sol.objective))
        }
        LpStatus::Infeasible => Err(LimitDesignError::Infeasible),
        LpStatus::Unbounded => Err(LimitDesignError::Unbounded),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_example, ExampleId, Node, PointLoad};

    fn single_bar(load: f64) -> GroundStructure {
        let nodes = vec![
            Node {
                id: 0,
                x: 0.0,
                y: 0.0,
                fixed_x: true,
                fixed_y: true,
            },
            Node {
                id: 1,
                x: 1000.0,
                y: 0.0,
                fixed_x: false,
                fixed_y: true,
            },
        ];
        GroundStructure::new(
            nodes,
            &[(0, 1)],
            &[],
            &[PointLoad {
                node: 1,
                fx: load,
                fy: 0.0,
            }],
            200.0,
        )
        .unwrap()
    }

    #[test]
    fn axially_loaded_bar() {
        // Capacity 200 MPa * 100 mm² = 20 kN against a 10 kN reference load.
        let gs = single_bar(10_000.0);
        let r = limit_load_factor(&gs, &[100.0]).unwrap();
        assert_eq!(r.status, LimitStatus::Optimal);
        assert!((r.lambda - 2.0).abs() < 1e-9);
        let q = r.forces.unwrap();
        assert!((q[0] - 20_000.0).abs() < 1e-6);
    }

    #[test]
    fn zero_capacity_zero_reference_is_lambda_zero() {
        let gs = single_bar(10_000.0);
        let r = limit_load_factor(&gs, &[0.0]).unwrap();
        assert_eq!(r.status, LimitStatus::Optimal);
        assert!(r.lambda.abs() < 1e-12);
    }

    #[test]
    fn dead_load_overload_is_mechanism_or_overload() {
        let nodes = vec![
            Node {
                id: 0,
                x: 0.0,
                y: 0.0,
                fixed_x: true,
                fixed_y: true,
            },
            Node {
                id: 1,
                x: 1000.0,
                y: 0.0,
                fixed_x: false,
                fixed_y: false,
            },
        ];
        let gs = GroundStructure::new(
            nodes,
            &[(0, 1)],
            &[PointLoad {
                node: 1,
                fx: 50_000.0,
                fy: 0.0,
            }],
            &[PointLoad {
                node: 1,
                fx: 0.0,
                fy: 1000.0,
            }],
            200.0,
        )
        .unwrap();
        // Zero area: the 50 kN dead load cannot be carried, and the reference
        // load acts in a different direction so no load factor can cancel it.
        let r = limit_load_factor(&gs, &[0.0]).unwrap();
        assert_eq!(r.status, LimitStatus::MechanismOrOverload);
        assert!(r.lambda == f64::NEG_INFINITY);
    }

    #[test]
    fn zero_reference_load_is_unbounded() {
        let nodes = vec![
            Node {
                id: 0,
                x: 0.0,
                y: 0.0,
                fixed_x: true,
                fixed_y: true,
            },
            Node {
                id: 1,
                x: 1000.0,
                y: 0.0,
                fixed_x: false,
                fixed_y: true,
            },
        ];
        let gs = GroundStructure::new(nodes, &[(0, 1)], &[], &[], 200.0).unwrap();
        let r = limit_load_factor(&gs, &[100.0]).unwrap();
        assert_eq!(r.status, LimitStatus::Unbounded);
    }

    #[test]
    fn forces_satisfy_equilibrium_and_yield() {
        let (gs, design) = builtin_example(ExampleId::I);
        let r = limit_load_factor(&gs, &design.areas).unwrap();
        assert_eq!(r.status, LimitStatus::Optimal);
        let q = r.forces.as_ref().unwrap();
        let cols = gs.equilibrium_columns();
        for i in 0..gs.dof_count() {
            let mut acc = 0.0;
            for (j, col) in cols.iter().enumerate() {
                acc += q[j] * col[i];
            }
            let want = r.lambda * gs.reference_load()[i] + gs.dead_load()[i];
            assert!((acc - want).abs() < 1e-4, "equilibrium residual at dof {i}");
        }
        for (j, &qj) in q.iter().enumerate() {
            assert!(qj.abs() <= gs.yield_stress() * design.areas[j] + 1e-4);
        }
    }

    #[test]
    fn single_bar_limit_design_uses_whole_budget() {
        let gs = single_bar(10_000.0);
        let (design, lambda) = classical_limit_design(&gs, 1.0e6).unwrap();
        // Budget 1e6 mm³ over a 1000 mm bar -> 1000 mm², capacity 200 kN.
        assert!((design.areas[0] - 1000.0).abs() < 1e-6);
        assert!((lambda - 20.0).abs() < 1e-9);
    }

    #[test]
    fn limit_design_scales_linearly_without_dead_load() {
        let (gs, design) = builtin_example(ExampleId::II);
        let (_, l1) = classical_limit_design(&gs, design.volume_budget).unwrap();
        let (_, l2) = classical_limit_design(&gs, 2.0 * design.volume_budget).unwrap();
        assert!((l2 - 2.0 * l1).abs() < 1e-6 * l1.abs());
    }

    #[test]
    fn scaling_of_areas_scales_lambda_without_dead_load() {
        let (gs, design) = builtin_example(ExampleId::II);
        let r1 = limit_load_factor(&gs, &design.areas).unwrap();
        let scaled: Vec<f64> = design.areas.iter().map(|a| 0.35 * a).collect();
        let r2 = limit_load_factor(&gs, &scaled).unwrap();
        assert!((r2.lambda - 0.35 * r1.lambda).abs() < 1e-8 * (1.0 + r1.lambda));
    }
}

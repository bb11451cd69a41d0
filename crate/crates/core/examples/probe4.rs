use trussopt_core::lp::{solve_lp, LpProblem};
use trussopt_core::*;

// Explore the optimal face of the limit-design program: fix lambda at the
// optimum and maximize each vanished member's area.
fn main() {
    let (gs, design) = builtin_example(ExampleId::I);
    let m = gs.member_count();
    let d = gs.dof_count();
    let cols = gs.equilibrium_columns();
    let sigma = gs.yield_stress();
    let lengths = gs.member_lengths();
    let volume_budget = design.volume_budget;
    let lambda_star = 35.2394043790f64;
    let n = 2 + 4 * m;
    let iq = |i: usize| 1 + i;
    let ix = |i: usize| 1 + m + i;
    let iu = |i: usize| 1 + 2 * m + i;
    let iw = |i: usize| 1 + 3 * m + i;
    let iv = n - 1;
    let build = |obj_member: usize| -> LpProblem {
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for i in 0..d {
            let mut row = vec![0.0; n];
            row[0] = -gs.reference_load()[i];
            for (j, col) in cols.iter().enumerate() {
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
        objective[ix(obj_member)] = 1.0;
        let mut lower = vec![0.0; n];
        // Pin the load factor at (slightly below) the optimum.
        lower[0] = lambda_star - 1e-7;
        let mut upper = vec![f64::INFINITY; n];
        upper[0] = f64::INFINITY;
        for j in 0..m {
            lower[iq(j)] = f64::NEG_INFINITY;
        }
        LpProblem { objective, rows, rhs, lower, upper }
    };
    for j in 0..m {
        let sol = solve_lp(&build(j)).unwrap();
        println!("max x[{j}] on optimal face = {:.4}", sol.objective);
    }
}

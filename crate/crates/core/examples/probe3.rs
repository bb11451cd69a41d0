use trussopt_core::lp::{solve_lp_bland, LpProblem};
use trussopt_core::*;

fn main() {
    let (gs, design) = builtin_example(ExampleId::I);
    let m = gs.member_count();
    let d = gs.dof_count();
    let cols = gs.equilibrium_columns();
    let sigma = gs.yield_stress();
    let lengths = gs.member_lengths();
    let volume_budget = design.volume_budget;
    let n = 2 + 4 * m;
    let iq = |i: usize| 1 + i;
    let ix = |i: usize| 1 + m + i;
    let iu = |i: usize| 1 + 2 * m + i;
    let iw = |i: usize| 1 + 3 * m + i;
    let iv = n - 1;
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
    objective[0] = 1.0;
    let mut lower = vec![0.0; n];
    lower[0] = f64::NEG_INFINITY;
    for j in 0..m {
        lower[iq(j)] = f64::NEG_INFINITY;
    }
    let upper = vec![f64::INFINITY; n];
    let sol = solve_lp_bland(&LpProblem { objective, rows, rhs, lower, upper }).unwrap();
    let live = (0..m).filter(|j| sol.primal[ix(*j)] > 1e-6).count();
    println!("bland: lambda* = {:.10}, live = {live}", sol.objective);
}

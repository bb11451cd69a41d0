use trussopt_core::lp::{solve_lp, LpProblem, LpStatus};
use trussopt_core::model::{GroundStructure, Node, PointLoad};
use trussopt_core::*;

fn build_variant(pr_up: bool) -> (GroundStructure, Design) {
    const L: f64 = 1000.0;
    let mut nodes = Vec::new();
    for i in 0..4 {
        for j in 0..2 {
            let fixed = i == 0;
            nodes.push(Node {
                id: nodes.len(), x: i as f64 * L, y: j as f64 * L,
                fixed_x: fixed, fixed_y: fixed,
            });
        }
    }
    let members: Vec<(usize, usize)> = vec![
        (0, 2), (2, 4), (4, 6), (1, 3), (3, 5), (5, 7), (2, 3), (4, 5), (6, 7),
        (0, 3), (1, 2), (2, 5), (3, 4), (4, 7), (5, 6), (0, 5), (1, 4), (2, 7), (3, 6),
    ];
    let dead = vec![
        PointLoad { node: 6, fx: 50_000.0, fy: 0.0 },
        PointLoad { node: 7, fx: 50_000.0, fy: 0.0 },
    ];
    let sign = if pr_up { 1.0 } else { -1.0 };
    let reference = vec![PointLoad { node: 7, fx: 0.0, fy: sign * 10_000.0 }];
    let gs = GroundStructure::new(nodes, &members, &dead, &reference, 200.0).unwrap();
    let areas = vec![1000.0; 19];
    let budget = gs.volume(&areas);
    (gs, Design::new(areas, budget))
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let pr_up = args.get(1).map(String::as_str) == Some("up");
    let alpha: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let (gs, design) = build_variant(pr_up);
    let m = gs.member_count();
    let d = gs.dof_count();
    let cols = gs.equilibrium_columns();
    let sigma = gs.yield_stress();
    let lengths = gs.member_lengths();
    let budget = design.volume_budget;

    let mut scenarios: Vec<Vec<usize>> = Vec::new();
    fn rec(start: usize, left: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 { out.push(cur.clone()); return; }
        for i in start..m { cur.push(i); rec(i + 1, left - 1, m, cur, out); cur.pop(); }
    }
    rec(0, alpha, m, &mut Vec::new(), &mut scenarios);

    let eval = |x: &[f64], dmg: &[usize]| -> (f64, Vec<f64>) {
        let mut rows = vec![vec![0.0; m + 1]; d];
        for i in 0..d {
            rows[i][0] = -gs.reference_load()[i];
            for j in 0..m { rows[i][j + 1] = cols[j][i]; }
        }
        let mut objective = vec![0.0; m + 1];
        objective[0] = 1.0;
        let mut lower = vec![f64::NEG_INFINITY; m + 1];
        let mut upper = vec![f64::INFINITY; m + 1];
        let mut t = vec![1.0; m];
        for &j in dmg { t[j] = 0.0; }
        for j in 0..m {
            let cap = sigma * t[j] * x[j].max(0.0);
            lower[j + 1] = -cap;
            upper[j + 1] = cap;
        }
        let sol = solve_lp(&LpProblem { objective, rows, rhs: gs.dead_load().to_vec(), lower, upper }).unwrap();
        if sol.status != LpStatus::Optimal {
            return (f64::NEG_INFINITY, vec![0.0; m]);
        }
        let mut grad = vec![0.0; m];
        for j in 0..m {
            let rc = sol.reduced_costs[j + 1];
            grad[j] = sigma * t[j] * rc.abs();
        }
        (sol.objective, grad)
    };

    let mut cuts: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut x = design.areas.clone();
    let mut best_lower = f64::NEG_INFINITY;
    let mut best_x = x.clone();
    let mut trust: f64 = 250.0;
    let t0 = std::time::Instant::now();
    for iter in 0..3000 {
        let mut worst = f64::INFINITY;
        for dmg in &scenarios {
            let (val, grad) = eval(&x, dmg);
            worst = worst.min(val);
            if val.is_finite() {
                let h = val - grad.iter().zip(&x).map(|(g, xi)| g * xi).sum::<f64>();
                cuts.push((grad, h));
            }
        }
        let center = if worst > best_lower && worst.is_finite() {
            best_lower = worst;
            best_x = x.clone();
            trust = (trust * 1.6).min(1000.0);
            x.clone()
        } else {
            trust *= 0.6;
            best_x.clone()
        };
        let nc = cuts.len();
        let n = m + 1 + nc + 1;
        let mut rows = Vec::with_capacity(nc + 1);
        let mut rhs = Vec::with_capacity(nc + 1);
        for (k, (g, h)) in cuts.iter().enumerate() {
            let mut row = vec![0.0; n];
            for j in 0..m { row[j] = -g[j]; }
            row[m] = 1.0;
            row[m + 1 + k] = 1.0;
            rows.push(row);
            rhs.push(*h);
        }
        let mut row = vec![0.0; n];
        for j in 0..m { row[j] = lengths[j]; }
        row[n - 1] = 1.0;
        rows.push(row);
        rhs.push(budget);
        let mut objective = vec![0.0; n];
        objective[m] = 1.0;
        let mut lower = vec![0.0; n];
        let mut upper = vec![f64::INFINITY; n];
        lower[m] = f64::NEG_INFINITY;
        for j in 0..m {
            lower[j] = (center[j] - trust).max(0.0);
            upper[j] = center[j] + trust;
        }
        let master = solve_lp(&LpProblem { objective, rows, rhs, lower, upper }).unwrap();
        assert_eq!(master.status, LpStatus::Optimal);
        let gap = master.objective - best_lower;
        x = master.primal[..m].to_vec();
        let tr_binding = (0..m).any(|j| {
            (x[j] - (center[j] + trust)).abs() < 1e-9 * (1.0 + trust)
                || ((x[j] - (center[j] - trust).max(0.0)).abs() < 1e-9 * (1.0 + trust)
                    && center[j] - trust > 0.0)
        });
        if gap <= 1e-6 * (1.0 + best_lower.abs()) && !tr_binding {
            println!("converged at iter {iter} ({:.0}s)", t0.elapsed().as_secs_f64());
            break;
        }
    }
    let wc = worst_case(&gs, &best_x, alpha, 0.0);
    println!(
        "pr_up={pr_up} alpha={alpha}: GLOBAL = {:.6} (mult {})",
        wc.worst_lambda, wc.multiplicity()
    );
    let xr: Vec<f64> = best_x.iter().map(|v| (v * 10.0).round() / 10.0).collect();
    println!("x = {xr:?}");
}

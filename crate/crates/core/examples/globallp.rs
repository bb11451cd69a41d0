use trussopt_core::lp::{solve_lp, LpProblem, LpStatus};
use trussopt_core::*;

// Exact optimum of the worst-case limit load over designs via cutting planes:
// each scenario's limit load is a concave piecewise-linear function of x, so
// Kelley's method with exact supergradients converges to the global optimum.
fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("I");
    let alpha: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let id = if which == "I" { ExampleId::I } else { ExampleId::II };
    let (gs, design) = builtin_example(id);
    let m = gs.member_count();
    let d = gs.dof_count();
    let cols = gs.equilibrium_columns();
    let sigma = gs.yield_stress();
    let lengths = gs.member_lengths();
    let budget = design.volume_budget;

    let mut scenarios: Vec<Vec<usize>> = Vec::new();
    fn rec(start: usize, left: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 { out.push(cur.clone()); return; }
        for i in start..m {
            cur.push(i);
            rec(i + 1, left - 1, m, cur, out);
            cur.pop();
        }
    }
    rec(0, alpha, m, &mut Vec::new(), &mut scenarios);

    // Per-scenario limit load with a supergradient wrt x from the bound
    // reduced costs: d lambda / d x_j = sigma * t_j * |rc of q_j| at a bound.
    let eval = |x: &[f64], dmg: &[usize]| -> (f64, Vec<f64>) {
        let mut rows = vec![vec![0.0; m + 1]; d];
        for i in 0..d {
            rows[i][0] = -gs.reference_load()[i];
            for j in 0..m {
                rows[i][j + 1] = cols[j][i];
            }
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
        let sol = solve_lp(&LpProblem {
            objective, rows, rhs: gs.dead_load().to_vec(), lower, upper,
        }).unwrap();
        if sol.status != LpStatus::Optimal {
            return (f64::NEG_INFINITY, vec![0.0; m]);
        }
        let mut grad = vec![0.0; m];
        for j in 0..m {
            let q = sol.primal[j + 1];
            let cap = sigma * t[j] * x[j].max(0.0);
            let rc = sol.reduced_costs[j + 1];
            // At the upper bound d val/d cap = rc >= 0; at the lower bound
            // lower = -cap so d val/d cap = -rc >= 0.
            let at_upper = (q - cap).abs() <= 1e-7 * (1.0 + cap);
            let at_lower = (q + cap).abs() <= 1e-7 * (1.0 + cap);
            if at_upper && rc > 0.0 {
                grad[j] = sigma * t[j] * rc;
            } else if at_lower && rc < 0.0 {
                grad[j] = -sigma * t[j] * rc;
            }
        }
        (sol.objective, grad)
    };

    // Master LP over (x, lbar) with accumulated cuts and a trust region that
    // keeps the iterates where every scenario stays feasible.
    let mut cuts: Vec<(Vec<f64>, f64)> = Vec::new(); // lbar <= g.x + h
    let mut x = if std::env::args().nth(3).as_deref() == Some("warm") {
        // Near-optimal interior design for the hardest case.
        vec![
            1145.0, 1018.0, 823.0, 1495.0, 1032.0, 842.0, 842.0, 843.0, 843.0, 1548.0,
            1242.0, 934.0, 925.0, 800.0, 789.0, 1373.0, 1411.0, 700.0, 700.0,
        ]
    } else {
        design.areas.clone()
    };
    let mut best_lower = f64::NEG_INFINITY;
    let mut best_x = x.clone();
    let mut trust: f64 = 250.0;
    let t0 = std::time::Instant::now();
    for iter in 0..3000 {
        let mut worst = f64::INFINITY;
        let mut evaluated: Vec<(f64, Vec<f64>)> = Vec::with_capacity(scenarios.len());
        for dmg in &scenarios {
            let (val, grad) = eval(&x, dmg);
            worst = worst.min(val);
            evaluated.push((val, grad));
        }
        // Keep master growth linear: cut only the few worst scenarios.
        let mut order: Vec<usize> = (0..evaluated.len()).collect();
        order.sort_by(|&a, &b| evaluated[a].0.total_cmp(&evaluated[b].0));
        for &s in order.iter().take(12) {
            let (val, grad) = &evaluated[s];
            if val.is_finite() {
                let h = val - grad.iter().zip(&x).map(|(g, xi)| g * xi).sum::<f64>();
                cuts.push((grad.clone(), h));
            }
        }
        let center = if worst > best_lower && worst.is_finite() {
            best_lower = worst;
            best_x = x.clone();
            trust = (trust * 1.6).min(1000.0);
            x.clone()
        } else {
            trust = (trust * 0.6).max(25.0);
            best_x.clone()
        };
        // maximize lbar st lbar <= g.x + h (cuts), c.x <= budget,
        // max(0, center - trust) <= x <= center + trust:
        // variables [x (m), lbar, cut slacks, volume slack].
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
        let upper_bound = master.objective;
        x = master.primal[..m].to_vec();
        let gap = upper_bound - best_lower;
        if iter % 25 == 0 {
            println!(
                "iter {iter}: lower {best_lower:.6}, model {upper_bound:.6}, trust {trust:.1}, {:.1}s",
                t0.elapsed().as_secs_f64()
            );
        }
        // The model value is only a global upper bound once the trust region
        // stops binding; stop when the gap closes with a slack trust region.
        let tr_binding = (0..m).any(|j| {
            (x[j] - (center[j] + trust)).abs() < 1e-9 * (1.0 + trust)
                || (x[j] - (center[j] - trust).max(0.0)).abs() < 1e-9 * (1.0 + trust)
                    && center[j] - trust > 0.0
        });
        if gap <= 1e-6 * (1.0 + best_lower.abs()) && !tr_binding {
            println!("converged at iter {iter}: gap {gap:.2e}, trust not binding");
            break;
        }
    }
    let wc = worst_case(&gs, &best_x, alpha, 0.0);
    println!(
        "example {which} alpha={alpha}: GLOBAL worst-case lambda = {:.6} (evaluator {:.6}, multiplicity {})",
        best_lower, wc.worst_lambda, wc.multiplicity()
    );
    let xr: Vec<f64> = best_x.iter().map(|v| (v * 10.0).round() / 10.0).collect();
    println!("x = {xr:?}");
}

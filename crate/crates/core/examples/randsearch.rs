use rand::{Rng, SeedableRng};
use trussopt_core::*;

// Random-search upper-bound probe: can any feasible design beat the
// cutting-plane value? Samples random feasible designs plus perturbations
// around the incumbent best.
fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("I");
    let alpha: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let id = if which == "I" { ExampleId::I } else { ExampleId::II };
    let (gs, design) = builtin_example(id);
    let m = gs.member_count();
    let lengths = gs.member_lengths();
    let budget = design.volume_budget;

    // Cutting-plane solution for example I, alpha 1.
    let start: Vec<f64> = vec![
        2789.0, 1433.8, 628.9, 2870.8, 1433.8, 1276.6, 322.4, 239.0, 638.3, 1074.0, 1016.1,
        108.8, 282.4, 549.2, 562.5, 1244.4, 1849.1, 713.7, 538.0,
    ];
    let project = |mut x: Vec<f64>| -> Vec<f64> {
        for v in x.iter_mut() {
            *v = v.max(1e-6);
        }
        let vol: f64 = lengths.iter().zip(&x).map(|(c, a)| c * a).sum();
        let scale = budget / vol;
        for v in x.iter_mut() {
            *v *= scale;
        }
        x
    };

    let mut rng = rand::rngs::StdRng::seed_from_u64(123);
    let mut best = worst_case(&gs, &project(start.clone()), alpha, 0.0).worst_lambda;
    let mut best_x = project(start.clone());
    println!("start worst = {best:.6}");
    let t0 = std::time::Instant::now();
    for round in 0..6 {
        let sigma = [400.0, 200.0, 100.0, 50.0, 20.0, 5.0][round];
        let mut improved = 0;
        for _ in 0..3000 {
            let cand: Vec<f64> = best_x
                .iter()
                .map(|v| (v + rng.random_range(-sigma..sigma)).max(1e-6))
                .collect();
            let cand = project(cand);
            let w = worst_case(&gs, &cand, alpha, 0.0).worst_lambda;
            if w > best {
                best = w;
                best_x = cand;
                improved += 1;
            }
        }
        println!(
            "round {round} (sigma {sigma}): best = {best:.6} ({improved} improvements, {:.0}s)",
            t0.elapsed().as_secs_f64()
        );
    }
    println!("final best = {best:.6}");
    let xr: Vec<f64> = best_x.iter().map(|v| (v * 10.0).round() / 10.0).collect();
    println!("x = {xr:?}");
}

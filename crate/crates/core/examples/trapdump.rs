use trussopt_core::dfo::{kernel_basis, sample_set, stencil_gradient, StencilSample};
use trussopt_core::sqp::{run, BfgsDenominator, SqpConfig};
use trussopt_core::*;

fn main() {
    let (gs, design) = builtin_example(ExampleId::I);
    let cfg = SqpConfig {
        bfgs_denominator: BfgsDenominator::Conventional,
        ..SqpConfig::default()
    };
    let out = run(&gs, 2, 0.0, &design, &cfg).unwrap();
    let x = &out.design.areas;
    println!("trapped f = {:.6}", out.worst.worst_lambda);
    let xr: Vec<f64> = x.iter().map(|v| (v * 100.0).round() / 100.0).collect();
    println!("x = {xr:?}");
    let costs = gs.member_lengths();
    let vol = gs.volume(x);
    println!("volume = {vol:.4e} of budget {:.4e} ({:.4}%)", design.volume_budget, 100.0 * vol / design.volume_budget);

    // Recreate the sample set at a mid radius and census the values.
    let basis = kernel_basis(&costs).unwrap();
    for radius in [3.0, 0.1, 1e-3] {
        let points = sample_set(x, radius, &basis, &costs, vol, 1e-6).unwrap();
        let values: Vec<f64> = points
            .iter()
            .map(|p| worst_case(&gs, &p.areas, 2, 0.0).f_value)
            .collect();
        let inf = values.iter().filter(|v| !v.is_finite()).count();
        let better = values
            .iter()
            .filter(|v| **v < out.worst.f_value)
            .count();
        let repaired = points.iter().filter(|p| p.repaired).count();
        let sample = StencilSample {
            center: x.clone(),
            center_value: out.worst.f_value,
            points,
            values,
            radius,
        };
        let g = stencil_gradient(&sample);
        let gn: f64 = g.gradient.iter().map(|v| v * v).sum::<f64>().sqrt();
        println!(
            "radius {radius}: {inf}/36 unstable, {better} improving, {repaired} repaired, |g| = {gn:.4e}"
        );
    }
}

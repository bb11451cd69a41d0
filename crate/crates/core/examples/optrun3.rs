use trussopt_core::sqp::{run, BfgsDenominator, SqpConfig, StencilRefresh};
use trussopt_core::*;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("I");
    let alpha: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let denom = match args.get(3).map(String::as_str) {
        Some("paper") => BfgsDenominator::Paper,
        _ => BfgsDenominator::Conventional,
    };
    let refresh = match args.get(4).map(String::as_str) {
        Some("level") => StencilRefresh::PerRadiusLevel,
        _ => StencilRefresh::EveryIteration,
    };
    let id = if which == "I" { ExampleId::I } else { ExampleId::II };
    let (gs, design) = builtin_example(id);
    let cfg = SqpConfig {
        bfgs_denominator: denom,
        stencil_refresh: refresh,
        ..SqpConfig::default()
    };
    let t0 = std::time::Instant::now();
    match run(&gs, alpha, 0.0, &design, &cfg) {
        Ok(out) => {
            let sf = out.trace.iter().filter(|r| r.stencil_failure).count();
            let lf = out.trace.iter().filter(|r| r.line_search_failure).count();
            println!(
                "ex {which} a={alpha} {denom:?} {refresh:?}: worst = {:.6}, mult = {}, qp = {}, evals = {}, term = {}, k = {}, {:.1}s | sf {sf} lf {lf}",
                out.worst.worst_lambda, out.worst.multiplicity(), out.counters.qp_solves,
                out.counters.objective_evaluations, out.termination,
                out.trace.last().map(|r| r.k).unwrap_or(0), t0.elapsed().as_secs_f64(),
            );
        }
        Err(e) => println!("ex {which} a={alpha} {denom:?} {refresh:?}: ERROR {e}"),
    }
}

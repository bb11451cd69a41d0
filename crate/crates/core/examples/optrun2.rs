use trussopt_core::sqp::{run, BfgsDenominator, SqpConfig};
use trussopt_core::*;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("I");
    let alpha: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let eps: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(5e-4);
    let id = if which == "I" { ExampleId::I } else { ExampleId::II };
    let (gs, design) = builtin_example(id);
    let cfg = SqpConfig {
        bfgs_denominator: BfgsDenominator::Paper,
        direction_tolerance: eps,
        ..SqpConfig::default()
    };
    let t0 = std::time::Instant::now();
    match run(&gs, alpha, 0.0, &design, &cfg) {
        Ok(out) => {
            let sf = out.trace.iter().filter(|r| r.stencil_failure).count();
            let lf = out.trace.iter().filter(|r| r.line_search_failure).count();
            let full = out.trace.iter().filter(|r| r.step == Some(1.0)).count();
            let part = out.trace.iter().filter(|r| r.step.is_some() && r.step != Some(1.0)).count();
            println!(
                "ex {which} a={alpha}: worst = {:.6}, mult = {}, qp = {}, term = {}, r = {:.3e}, k = {}, {:.1}s | stencil_fail {sf}, ls_fail {lf}, full_steps {full}, partial_steps {part}",
                out.worst.worst_lambda, out.worst.multiplicity(), out.counters.qp_solves,
                out.termination, out.final_radius,
                out.trace.last().map(|r| r.k).unwrap_or(0), t0.elapsed().as_secs_f64(),
            );
        }
        Err(e) => println!("ex {which} a={alpha}: ERROR {e}"),
    }
}

use trussopt_core::sqp::{run, BfgsDenominator, SqpConfig};
use trussopt_core::*;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("I");
    let alpha: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let mode = match args.get(3).map(String::as_str) {
        Some("conventional") => BfgsDenominator::Conventional,
        _ => BfgsDenominator::Paper,
    };
    let id = if which == "I" { ExampleId::I } else { ExampleId::II };
    let (gs, design) = builtin_example(id);
    let cfg = SqpConfig { bfgs_denominator: mode, ..SqpConfig::default() };
    let t0 = std::time::Instant::now();
    match run(&gs, alpha, 0.0, &design, &cfg) {
        Ok(out) => {
            println!(
                "example {which} alpha={alpha} {mode:?}: worst = {:.6}, mult = {}, qp = {}, evals = {}, lps = {}, term = {}, r = {:.3e}, k = {}, {:.1}s",
                out.worst.worst_lambda,
                out.worst.multiplicity(),
                out.counters.qp_solves,
                out.counters.objective_evaluations,
                out.counters.lp_solves,
                out.termination,
                out.final_radius,
                out.trace.last().map(|r| r.k).unwrap_or(0),
                t0.elapsed().as_secs_f64(),
            );
            let mut csv = String::from("k,r,f,d_norm,step,stencil_fail,ls_fail\n");
            for row in &out.trace {
                csv.push_str(&format!(
                    "{},{:.4e},{:.8},{},{},{},{}\n",
                    row.k,
                    row.radius,
                    row.f_value,
                    row.direction_norm.map(|v| format!("{v:.4e}")).unwrap_or_default(),
                    row.step.map(|v| format!("{v:.4e}")).unwrap_or_default(),
                    row.stencil_failure as u8,
                    row.line_search_failure as u8,
                ));
            }
            std::fs::write("/tmp/trace.csv", csv).unwrap();
        }
        Err(e) => println!("ERROR {e}"),
    }
}

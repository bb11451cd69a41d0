use trussopt_core::*;

fn main() {
    let (gs, design) = builtin_example(ExampleId::I);
    let (opt, lstar) = classical_limit_design(&gs, design.volume_budget).unwrap();
    println!("lambda* = {lstar:.10}");
    for (i, a) in opt.areas.iter().enumerate() {
        if *a > 1e-6 {
            let m = &gs.members()[i];
            println!("  member {i}: {:.2} mm2  ({} - {})", a, m.node_a, m.node_b);
        }
    }
    let live = opt.areas.iter().filter(|a| **a > 1e-6).count();
    println!("live = {live}");
    // Verify the worst case at the limit-design optimum collapses at one removal.
    let wc = worst_case(&gs, &opt.areas, 1, 0.0);
    println!("alpha=1 worst at optimum: {}", wc.worst_lambda);
}

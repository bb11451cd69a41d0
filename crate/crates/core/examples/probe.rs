use trussopt_core::*;

fn main() {
    for id in [ExampleId::I, ExampleId::II] {
        let (gs, design) = builtin_example(id);
        let intact = limit_load_factor(&gs, &design.areas).unwrap();
        println!("example {id}: intact lambda = {:.10}", intact.lambda);
        let (opt, lstar) = classical_limit_design(&gs, design.volume_budget).unwrap();
        let live = opt.areas.iter().filter(|a| **a > 1e-6).count();
        println!("example {id}: lambda* = {lstar:.10}, live = {live}");
        for alpha in [1usize, 2] {
            let wc = worst_case(&gs, &design.areas, alpha, 0.0);
            println!(
                "example {id} alpha={alpha}: worst = {:.10}, mult = {}, minimizers = {:?}",
                wc.worst_lambda,
                wc.multiplicity(),
                wc.minimizers.iter().map(|s| s.damaged().to_vec()).collect::<Vec<_>>()
            );
        }
    }
}

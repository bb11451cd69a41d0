use trussopt_core::model::{GroundStructure, Node, PointLoad};
use trussopt_core::*;

fn build(pd_sign: f64, pr_sign: f64) -> (GroundStructure, Design) {
    const L: f64 = 1000.0;
    let mut nodes = Vec::new();
    for i in 0..4 {
        for j in 0..2 {
            let fixed = i == 0;
            nodes.push(Node {
                id: nodes.len(),
                x: i as f64 * L,
                y: j as f64 * L,
                fixed_x: fixed,
                fixed_y: fixed,
            });
        }
    }
    let members: Vec<(usize, usize)> = vec![
        (0, 2), (2, 4), (4, 6), (1, 3), (3, 5), (5, 7), (2, 3), (4, 5), (6, 7),
        (0, 3), (1, 2), (2, 5), (3, 4), (4, 7), (5, 6), (0, 5), (1, 4), (2, 7), (3, 6),
    ];
    let dead = vec![
        PointLoad { node: 6, fx: pd_sign * 50_000.0, fy: 0.0 },
        PointLoad { node: 7, fx: pd_sign * 50_000.0, fy: 0.0 },
    ];
    let reference = vec![PointLoad { node: 7, fx: 0.0, fy: pr_sign * 10_000.0 }];
    let gs = GroundStructure::new(nodes, &members, &dead, &reference, 200.0).unwrap();
    let areas = vec![1000.0; 19];
    let budget = gs.volume(&areas);
    (gs, Design::new(areas, budget))
}

fn main() {
    for (pd, pr, label) in [
        (1.0, -1.0, "+x,-y (current)"),
        (1.0, 1.0, "+x,+y"),
        (-1.0, 1.0, "-x,+y"),
        (-1.0, -1.0, "-x,-y"),
    ] {
        let (gs, design) = build(pd, pr);
        let w1 = worst_case(&gs, &design.areas, 1, 0.0).worst_lambda;
        let w2 = worst_case(&gs, &design.areas, 2, 0.0).worst_lambda;
        println!("{label}: alpha1 = {w1:.6}, alpha2 = {w2:.6}  (paper: 6.7187, 3.0474)");
    }
}

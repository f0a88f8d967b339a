//! The built-in simplex and branch-and-bound on a small knapsack.
use revcode::solver::{solve_lp, solve_milp, LinearRow, MilpProblem};

fn main() {
    let values = [10.0, 13.0, 7.0, 8.0, 4.0, 9.0];
    let weights = [5.0, 7.0, 4.0, 5.0, 2.0, 6.0];
    let mut p = MilpProblem::new(values.len());
    p.objective = values.iter().map(|v| -v).collect();
    p.inequalities
        .push(LinearRow::new(weights.iter().copied().enumerate().collect(), 15.0));
    print!("{}", p.to_lp_string());

    let lp = solve_lp(&p);
    println!("LP relaxation: {:.3} at {:?}", -lp.objective, lp.values);

    p.integer = vec![true; values.len()];
    let ip = solve_milp(&p);
    println!(
        "integer optimum: {} at {:?} ({} nodes, {} pivots)",
        -ip.objective, ip.values, ip.stats.nodes_explored, ip.stats.pivots
    );
}

//! Exhaustive search on a three-value histogram, checked against the naive
//! grid over every vector.
use revcode::brute::{brute_force_optimize, naive_grid_optimize, DEFAULT_GRID_CAP};
use revcode::model::{max_capacity_dp, AbsErrorHistogram, ProblemSpec};

fn main() -> revcode::Result<()> {
    let hist = AbsErrorHistogram::new(vec![4, 1, 3]);
    let base = ProblemSpec::new(hist, 2, 2, 0.0)?;
    println!("max capacity {:.3} bits", max_capacity_dp(&base));
    for payload in [0.0, 1.0, 4.0, 5.0, 7.0] {
        let spec = base.with_payload(payload);
        let best = brute_force_optimize(&spec)?;
        let grid = naive_grid_optimize(&spec, DEFAULT_GRID_CAP)?;
        assert_eq!(best.x, grid.x);
        println!(
            "payload {payload:>4}: x = {:?}, capacity {:.3}, distortion {:.3} ({} candidates)",
            best.x.as_slice(),
            best.eval.capacity,
            best.eval.distortion,
            best.evaluated_count
        );
    }
    Ok(())
}

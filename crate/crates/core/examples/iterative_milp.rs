//! The successive-linearisation MILP loop, with its per-iteration trace.
use revcode::brute::brute_force_optimize;
use revcode::milp::iterate_optimize;
use revcode::model::{max_capacity_dp, AbsErrorHistogram, ProblemSpec};

fn main() -> revcode::Result<()> {
    let counts = vec![900, 610, 380, 240, 150, 90, 55, 30, 20, 12, 7, 4, 2];
    let n = counts.len() - 1;
    let base = ProblemSpec::new(AbsErrorHistogram::new(counts), n, 3, 0.0)?;
    let cap = max_capacity_dp(&base);
    let spec = base.with_payload(0.6 * cap);
    println!("payload {:.2} of {:.2} bits", spec.payload, cap);

    let r = iterate_optimize(&spec)?;
    for t in &r.trace {
        println!(
            "iter {}: x = {:?} surrogate {:.3} true {:.3} capacity {:.2} ({} nodes)",
            t.iteration,
            t.x.as_slice(),
            t.milp_objective,
            t.true_distortion,
            t.capacity_bits,
            t.nodes
        );
    }
    let best = brute_force_optimize(&spec)?;
    println!("milp  x = {:?} distortion {:.3}", r.x.as_slice(), r.eval.distortion);
    println!("brute x = {:?} distortion {:.3}", best.x.as_slice(), best.eval.distortion);
    Ok(())
}

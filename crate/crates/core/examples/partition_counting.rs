//! Partitions of the quota and the number of feasible codings they imply.
use revcode::brute::{feasible_count, partitions, total_feasible};

fn main() {
    for t in 2..=4 {
        println!("partitions of {t} (multiplicity of each summand):");
        for row in &partitions(t).rows {
            println!("  {row:?}");
        }
    }

    let n_star = 56; // magnitudes 0..=55
    println!("\nfeasible codings over {n_star} values:");
    for theta in 1..=6 {
        println!(
            "  quota {theta}: exactly {} -> up to {}",
            feasible_count(theta, n_star),
            total_feasible(theta, n_star)
        );
    }
}

//! Payload-distortion curves for quotas 1 to 4 on a synthetic image, MILP
//! against brute force, normalised per query pixel.
use revcode::cli::{curve, Method};
use revcode::imaging::{abs_error_histogram, choose_n, synthetic_image};
use revcode::model::{max_capacity_dp, ProblemSpec};

fn main() -> revcode::Result<()> {
    let img = synthetic_image(256, 256, 12, 2)?;
    let hist = abs_error_histogram(&img)?;
    println!("theta,payload,brute,milp");
    for theta in 1..=4 {
        let n = choose_n(&hist, theta, 0.999);
        let cap = max_capacity_dp(&ProblemSpec::new(hist.clone(), n, theta, 0.0)?);
        let grid: Vec<f64> = (1..=8).map(|k| (cap * k as f64 / 9.0).floor()).collect();
        let brute = curve(&hist, n, theta, &grid, Method::Brute, 20)?;
        let milp = curve(&hist, n, theta, &grid, Method::Milp, 20)?;
        for (b, m) in brute.iter().zip(&milp) {
            println!(
                "{theta},{},{:.6},{:.6}",
                b.payload,
                b.distortion_per_query.unwrap_or(f64::NAN),
                m.distortion_per_query.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}

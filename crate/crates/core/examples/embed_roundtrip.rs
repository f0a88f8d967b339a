//! Optimise a coding for a synthetic image, embed, extract and report PSNR.
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use revcode::codec::{build_coding_map, exact_capacity_bits, MessageBits};
use revcode::imaging::{
    abs_error_histogram, choose_n, decode, encode, mse_psnr, synthetic_image, write_pgm,
};
use revcode::milp::iterate_optimize;
use revcode::model::ProblemSpec;

fn main() -> revcode::Result<()> {
    let cover = synthetic_image(256, 256, 5, 2)?;
    let hist = abs_error_histogram(&cover)?;
    let theta = 3;
    let n = choose_n(&hist, theta, 0.999);
    println!("{} query pixels, n = {n}", hist.total());

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let message = MessageBits::random(&mut rng, 12_000);
    let spec = ProblemSpec::new(hist.clone(), n, theta, message.framed_len() as f64)?;
    let coding = iterate_optimize(&spec)?;
    let cap = exact_capacity_bits(&build_coding_map(&coding.x), &hist);
    println!("x = {:?}, exact capacity {cap} bits", coding.x.as_slice());

    let stego = encode(&cover, &coding.x, &message)?;
    let (mse, psnr) = mse_psnr(&cover, &stego)?;
    println!("mse {mse:.4}, psnr {psnr:.2} dB");

    let (restored, got) = decode(&stego, &coding.x)?;
    assert_eq!(restored, cover);
    assert_eq!(got, message);
    println!("cover and message recovered bit-exactly");

    if let Some(dir) = std::env::args().nth(1) {
        std::fs::write(format!("{dir}/cover.pgm"), write_pgm(&cover))?;
        std::fs::write(format!("{dir}/stego.pgm"), write_pgm(&stego))?;
    }
    Ok(())
}

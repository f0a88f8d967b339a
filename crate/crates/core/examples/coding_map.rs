//! How a link vector turns into stego intervals, and a modulate/demodulate
//! round trip on a bare error sequence.
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use revcode::codec::{build_coding_map, demodulate, exact_capacity_bits, modulate, MessageBits};
use revcode::model::{AbsErrorHistogram, LinkVector};

fn main() -> revcode::Result<()> {
    let x = LinkVector::new(vec![2, 1, 0, 0]);
    let map = build_coding_map(&x);
    for v in 0..=map.n() {
        println!("cover {v} -> stego {:?}", map.interval(v));
    }
    println!("bins {}..={} must be empty in the cover", map.n() + 1, map.max_stego());

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let errors: Vec<i32> = (0..200)
        .map(|_| {
            let m: i32 = [0, 0, 0, 1, 1, 2, 3][rng.gen_range(0..7)];
            if rng.gen_bool(0.5) { -m } else { m }
        })
        .collect();
    let hist = AbsErrorHistogram::from_magnitudes(errors.iter().map(|e| e.unsigned_abs()));
    let cap = exact_capacity_bits(&map, &hist);
    let message = MessageBits::from_bytes(b"hello, carrier");
    println!("capacity {cap} bits, message {} bits + 32 header", message.len());

    let stego = modulate(&errors, &map, &message)?;
    println!("first errors {:?}\n  modulated {:?}", &errors[..12], &stego[..12]);
    let (back, got) = demodulate(&stego, &map)?;
    assert_eq!(back, errors);
    println!("recovered {:?}", String::from_utf8_lossy(&got.to_bytes()));
    Ok(())
}

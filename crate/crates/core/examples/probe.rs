// temporary probe, not part of the crate
use stablecond::model::{validate_params, IncrementSampler, RngStream};

fn main() {
    let p = validate_params(1.5, 0.45).unwrap();
    let s = IncrementSampler::new(&p, 1e-4).unwrap();
    let mut rng = RngStream::new(1, 0).rng();
    let n = 20_000_000u64;
    let t0 = std::time::Instant::now();
    let mut acc = 0.0f64;
    for _ in 0..n {
        acc += s.sample(&mut rng);
    }
    let el = t0.elapsed().as_secs_f64();
    println!("sum {acc:.3}; {:.1} ns/draw single-thread", el / n as f64 * 1e9);
}

//! Shrinking a signed combination of many points to at most r+1 of them.

use lossescape::caratheodory::reduce_combination;
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> lossescape::Result<()> {
    let (r, h) = (3, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let z = Array2::from_shape_simple_fn((r, h), || StandardNormal.sample(&mut rng));
    let w = Array1::<f64>::from_shape_simple_fn(h, || StandardNormal.sample(&mut rng));
    // weights must lie in the unit l1 ball
    let w = &w / w.mapv(f64::abs).sum();

    let reduced = reduce_combination(&z, &w, 1.0, 1e-10)?;
    let support = reduced.iter().filter(|v| **v != 0.0).count();
    let err = (z.dot(&w) - z.dot(&reduced))
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()));

    println!("weights before: {w:.3}");
    println!("weights after:  {reduced:.3}");
    println!("support {h} -> {support} (bound r+1 = {})", r + 1);
    println!(
        "l1 norm {:.6} -> {:.6}",
        w.iter().map(|v| v.abs()).sum::<f64>(),
        reduced.iter().map(|v| v.abs()).sum::<f64>()
    );
    println!("reconstruction error {err:.2e}");
    Ok(())
}

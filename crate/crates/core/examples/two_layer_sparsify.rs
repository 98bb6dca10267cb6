//! One outer/inner matrix pair rewritten so only a few inner units stay in use.
//!
//! `A` reads `B`'s units through the activation; `C` is the input to `B`.

use lossescape::blocks::{sparsify_layer_pair, BlockSide};
use lossescape::netcore::apply_activation;
use lossescape::ActivationKind;
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> lossescape::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut gauss =
        |r, c| Array2::<f64>::from_shape_simple_fn((r, c), || StandardNormal.sample(&mut rng));
    let (m, p, d, n) = (1, 10, 2, 3);
    let a = gauss(m, p);
    let b = gauss(p, d);
    let x = gauss(d, n);
    let act = ActivationKind::Relu;

    let (a2, b2, perm) = sparsify_layer_pair(&a, &b, &x, act, 1.0, 1.0, BlockSide::Upper)?;
    let before = a.dot(&apply_activation(act, &b.dot(&x))?);
    let after = a2.dot(&apply_activation(act, &b2.dot(&x))?);
    let used = (0..p)
        .filter(|&u| a2.column(u).iter().any(|v| *v != 0.0))
        .count();

    println!(
        "units in use: {p} -> {used} (at most m(n+1) = {})",
        m * (n + 1)
    );
    println!("unit relabeling: {:?}", perm.as_slice());
    println!(
        "l1 norm of A: {:.4} -> {:.4}",
        a.mapv(f64::abs).sum(),
        a2.mapv(f64::abs).sum()
    );
    println!("outputs before {before:.6}");
    println!("outputs after  {after:.6}");
    Ok(())
}

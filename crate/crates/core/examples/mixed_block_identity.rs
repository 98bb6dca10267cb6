//! Two blocks sharing hidden layers: mixing outer layers mixes outputs, and
//! the risk is convex along the mix.

use lossescape::blocks::{embed_sum_hidden, to_block, BlockSide};
use lossescape::paths::{convex_outer_segment, is_path_convex};
use lossescape::verify::verify_block_identity;
use lossescape::{ActivationKind, Architecture, ConstraintSpec, Dataset, LossKind, NetworkParams};
use ndarray::array;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lossescape::Result<()> {
    let arch = Architecture::uniform(vec![1, 6, 1], ActivationKind::Sigmoid)?;
    let data = Dataset::new(array![[0.5, -1.0]], array![[0.2, 0.7]])?;
    let spec = ConstraintSpec::unconstrained();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let theta = NetworkParams::random(&arch, &mut rng, 1.0);
    let gamma = NetworkParams::random(&arch, &mut rng, 1.0);

    let upper = to_block(&arch, &theta, &data, &spec, BlockSide::Upper)?;
    let lower = to_block(&arch, &gamma, &data, &spec, BlockSide::Lower)?;
    let (t2, g2) = embed_sum_hidden(&upper.params, &lower.params, upper.s)?;

    let report = verify_block_identity(&t2, &g2, &arch, 200, 1, 1e-9)?;
    println!(
        "mixed-output identity over 200 random (c1, c2, x): max deviation {:.2e}, pass = {}",
        report.max_deviation, report.pass
    );

    let seg = convex_outer_segment(&t2, &g2)?;
    let convex = is_path_convex(&seg, &arch, &data, LossKind::Squared, 1001, 1e-9)?;
    println!("risk convex along the outer-layer segment: {convex}");
    Ok(())
}

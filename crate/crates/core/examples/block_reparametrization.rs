//! Moving a deep network into an upper block without changing its risk.

use lossescape::blocks::{is_block, to_block, BlockSide};
use lossescape::objective::{constraint_value, empirical_risk};
use lossescape::paths::{is_path_constant, PathSegment};
use lossescape::{ActivationKind, Architecture, ConstraintSpec, Dataset, LossKind, NetworkParams};
use ndarray::array;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lossescape::Result<()> {
    let arch = Architecture::uniform(vec![2, 14, 6, 1], ActivationKind::LeakyRelu { c: 0.1 })?;
    let data = Dataset::new(array![[0.5, -1.0], [1.5, 0.2]], array![[1.0, -1.0]])?;
    let spec = ConstraintSpec::new(0.1, 0.2, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let start = NetworkParams::random(&arch, &mut rng, 0.5);
    let loss = LossKind::Absolute;

    let block = to_block(&arch, &start, &data, &spec, BlockSide::Upper)?;
    println!("s = m(n+1)^l = {}", block.s);
    for (i, step) in block.steps.iter().enumerate() {
        let seg = PathSegment::from_step(step);
        let flat = is_path_constant(&seg, &arch, &data, loss, 1001, 1e-8)?;
        println!(
            "step {i:2}: {:?} on matrix {}, risk {:.10}, constant along segment: {flat}",
            step.kind,
            step.layer,
            empirical_risk(&arch, &step.after, &data, loss)?
        );
    }
    println!(
        "start risk {:.10}",
        empirical_risk(&arch, &start, &data, loss)?
    );
    println!(
        "is block: {}",
        is_block(&block.params, block.s, BlockSide::Upper)
    );
    println!(
        "constraint {:.6} -> {:.6}",
        constraint_value(&start, &spec),
        constraint_value(&block.params, &spec)
    );
    Ok(())
}

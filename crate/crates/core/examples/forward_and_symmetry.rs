//! Forward pass, empirical risk, and invariance under relabeling hidden units.

use lossescape::netcore::{forward_batch, permute_hidden};
use lossescape::objective::empirical_risk;
use lossescape::verify::verify_symmetry;
use lossescape::{ActivationKind, Architecture, Dataset, LossKind, NetworkParams, Permutation};
use ndarray::array;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lossescape::Result<()> {
    let arch = Architecture::uniform(vec![2, 5, 4, 1], ActivationKind::Relu)?;
    let data = Dataset::new(
        array![[1.0, -0.5, 2.0], [0.3, 1.0, -1.0]],
        array![[1.0, 0.0, -1.0]],
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let params = NetworkParams::random(&arch, &mut rng, 0.8);

    let out = forward_batch(&arch, &params, data.x().view())?;
    println!("outputs: {out:.4}");
    let risk = empirical_risk(&arch, &params, &data, LossKind::Squared)?;
    println!("squared risk: {risk:.6}");

    let perms = vec![
        Permutation::random(5, &mut rng),
        Permutation::random(4, &mut rng),
    ];
    let shuffled = permute_hidden(&params, &perms)?;
    let risk2 = empirical_risk(&arch, &shuffled, &data, LossKind::Squared)?;
    println!(
        "after permuting hidden units {:?} / {:?}: {risk2:.6}",
        perms[0].as_slice(),
        perms[1].as_slice()
    );

    let report = verify_symmetry(&arch, &params, &data, LossKind::Squared, 200, 1, 1e-10)?;
    println!(
        "200 random relabelings: max deviation {:.2e}, pass = {}",
        report.max_deviation, report.pass
    );
    Ok(())
}

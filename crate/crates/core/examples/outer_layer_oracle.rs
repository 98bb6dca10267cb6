//! With width 2m(n+1), fixing random inner layers and solving for the outer
//! layer already interpolates the data.

use lossescape::globalmin::{feature_rank, outer_layer_solve};
use lossescape::netcore::layer_input;
use lossescape::objective::empirical_risk;
use lossescape::{ActivationKind, Architecture, Dataset, LossKind, NetworkParams};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> lossescape::Result<()> {
    let (d, n, m) = (3, 4, 1);
    let arch = Architecture::uniform(vec![d, 10, m], ActivationKind::Sigmoid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut gauss =
        |r, c| Array2::<f64>::from_shape_simple_fn((r, c), || StandardNormal.sample(&mut rng));
    let data = Dataset::new(gauss(d, n), gauss(m, n))?;
    let loss = LossKind::Squared;

    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let draw = NetworkParams::random(&arch, &mut rng, 1.0);
    let features = layer_input(&arch, &draw, data.x().view(), 1)?;
    println!("feature rank {} of n = {n}", feature_rank(&features));
    let res = outer_layer_solve(&arch, &draw.matrices()[..1], &data, loss)?;
    println!(
        "outer solve risk {:.3e}, residual certificate {:.3e}",
        res.achieved_risk, res.certificate
    );

    let best_random = (0..1000)
        .map(|_| {
            empirical_risk(
                &arch,
                &NetworkParams::random(&arch, &mut rng, 1.0),
                &data,
                loss,
            )
        })
        .collect::<lossescape::Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    println!("best of 1000 random parameters: {best_random:.6}");
    Ok(())
}

//! Full pipeline: from a random start to an interpolating target along a
//! path on which the risk never increases.

use lossescape::globalmin::outer_layer_solve;
use lossescape::paths::{build_escape_path, EscapeOptions};
use lossescape::verify::{verify_path, Tolerances};
use lossescape::{ActivationKind, Architecture, ConstraintSpec, Dataset, LossKind, NetworkParams};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> lossescape::Result<()> {
    let (d, n, m) = (2, 3, 1);
    let arch = Architecture::uniform(vec![d, 8, m], ActivationKind::Relu)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut gauss =
        |r, c| Array2::<f64>::from_shape_simple_fn((r, c), || StandardNormal.sample(&mut rng));
    let data = Dataset::new(gauss(d, n), gauss(m, n))?;
    let spec = ConstraintSpec::unconstrained();
    let loss = LossKind::Squared;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = NetworkParams::random(&arch, &mut rng, 0.5);
    let inner = NetworkParams::random(&arch, &mut rng, 1.0).into_matrices();
    let oracle = outer_layer_solve(&arch, &inner[..1], &data, loss)?;
    println!(
        "target: outer-layer solve, rank {:?}, risk {:.3e}",
        oracle.rank, oracle.achieved_risk
    );

    let esc = build_escape_path(
        &arch,
        &start,
        &oracle.params,
        &data,
        loss,
        &spec,
        EscapeOptions::default(),
    )?;
    println!(
        "{} segments, c = {}, reached target: {}",
        esc.path.len(),
        esc.c,
        esc.reached_target
    );
    for seg in esc.path.segments() {
        println!("  {:?} {}", seg.kind, seg.label);
    }

    let report = verify_path(
        &esc.path,
        &arch,
        &data,
        loss,
        &spec,
        1001,
        Tolerances::default(),
        Some(0),
    )?;
    println!(
        "risk {:.6} -> {:.3e}, worst monotonicity violation {:.2e}, pass = {}",
        report.start_loss.unwrap_or(f64::NAN),
        report.end_loss.unwrap_or(f64::NAN),
        report.max_monotonicity_violation,
        report.passed()
    );
    Ok(())
}

//! Escape under a norm constraint, with a grid-searched target on a narrow
//! copy of the network zero-padded to full width.

use lossescape::blocks::embed_narrow;
use lossescape::globalmin::brute_force_min;
use lossescape::objective::constraint_value;
use lossescape::paths::{build_escape_path, EscapeOptions};
use lossescape::verify::{verify_path, Tolerances};
use lossescape::{ActivationKind, Architecture, ConstraintSpec, Dataset, LossKind, NetworkParams};
use ndarray::array;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lossescape::Result<()> {
    let arch = Architecture::uniform(vec![1, 8, 1], ActivationKind::Identity)?;
    let data = Dataset::new(array![[1.0, -0.5, 2.0]], array![[0.8, -0.3, 1.5]])?;
    let spec = ConstraintSpec::new(0.5, 0.5, 2.0)?;
    let loss = LossKind::Squared;

    let narrow = arch.with_hidden_width(1)?;
    let oracle = brute_force_min(&narrow, &data, loss, &spec, 0.01, 2.0)?;
    let target = embed_narrow(&oracle.params, &arch)?;
    println!(
        "grid-search target: risk {:.6}, r = {:.4}",
        oracle.achieved_risk,
        constraint_value(&target, &spec)
    );

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let raw = NetworkParams::random(&arch, &mut rng, 1.0);
    let start = raw.scaled(1.0 / constraint_value(&raw, &spec).max(1.0));
    let esc = build_escape_path(
        &arch,
        &start,
        &target,
        &data,
        loss,
        &spec,
        EscapeOptions::default(),
    )?;
    let report = verify_path(
        &esc.path,
        &arch,
        &data,
        loss,
        &spec,
        1001,
        Tolerances::default(),
        Some(2),
    )?;
    println!(
        "risk {:.6} -> {:.6}, worst constraint excess {:.2e}, pass = {}",
        report.start_loss.unwrap_or(f64::NAN),
        report.end_loss.unwrap_or(f64::NAN),
        report.max_constraint_excess,
        report.passed()
    );
    Ok(())
}

//! Deep linear networks need far less width: merging layers keeps the block
//! size at m(n+1) regardless of depth.

use lossescape::paths::{build_escape_path, required_width, EscapeOptions};
use lossescape::verify::{verify_path, Tolerances};
use lossescape::{ActivationKind, Architecture, ConstraintSpec, Dataset, LossKind, NetworkParams};
use ndarray::array;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lossescape::Result<()> {
    let arch = Architecture::uniform(vec![2, 8, 8, 1], ActivationKind::Identity)?;
    let data = Dataset::new(
        array![[1.0, 0.0, -1.0], [0.5, 2.0, 0.0]],
        array![[1.0, -0.5, 0.25]],
    )?;
    let spec = ConstraintSpec::unconstrained();
    let loss = LossKind::Squared;
    println!(
        "width 8; general bound {}, linear bound {}",
        required_width(1, 3, 2, false),
        required_width(1, 3, 2, true)
    );

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let start = NetworkParams::random(&arch, &mut rng, 0.7);
    let target = NetworkParams::random(&arch, &mut rng, 0.3);

    let refused = build_escape_path(
        &arch,
        &start,
        &target,
        &data,
        loss,
        &spec,
        EscapeOptions::default(),
    );
    println!(
        "general construction: {}",
        refused.err().map_or("ok".into(), |e| e.to_string())
    );

    let options = EscapeOptions {
        linear: true,
        ..EscapeOptions::default()
    };
    let esc = build_escape_path(&arch, &start, &target, &data, loss, &spec, options)?;
    let report = verify_path(
        &esc.path,
        &arch,
        &data,
        loss,
        &spec,
        1001,
        Tolerances::default(),
        Some(5),
    )?;
    println!(
        "linear construction: {} segments, risk {:.6} -> {:.6}, pass = {}",
        esc.path.len(),
        report.start_loss.unwrap_or(f64::NAN),
        report.end_loss.unwrap_or(f64::NAN),
        report.passed()
    );
    Ok(())
}

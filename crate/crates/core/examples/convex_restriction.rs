//! Cutting a convex loss curve at its minimizer so it only goes down.

use lossescape::paths::restrict_profile;

fn main() -> lossescape::Result<()> {
    let profiles: [(&str, fn(f64) -> f64); 3] = [
        ("(t - 0.8)^2", |t| (t - 0.8) * (t - 0.8)),
        ("1 - t", |t| 1.0 - t),
        ("constant", |_| 2.0),
    ];
    for (name, f) in profiles {
        let c = restrict_profile(|t| Ok(f(t)), 1e-12)?;
        let grid: Vec<f64> = (0..1001).map(|k| f(c * k as f64 / 1000.0)).collect();
        let increasing = grid.windows(2).any(|w| w[1] > w[0] + 1e-12);
        println!("{name:12} c = {c:.8}, restricted profile increases: {increasing}");
    }
    Ok(())
}

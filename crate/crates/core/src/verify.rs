//! Grid-based checks of paths and block identities.
//!
//! Failures are recorded in the returned reports rather than raised, and
//! every pass flag can be recomputed from the recorded maxima and the
//! tolerances stored next to them.

use std::time::{Duration, Instant};

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::blocks::mix_block;
use crate::error::{Error, Result};
use crate::netcore::{forward, permute_hidden, Architecture, Dataset, NetworkParams, Permutation};
use crate::objective::{empirical_risk, ConstraintSpec, LossKind};
use crate::paths::{
    constraint_profile, grid_times, loss_profile, max_midpoint_violation,
    max_monotonicity_violation, max_relative_deviation, CompositePath, SegmentKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative deviation allowed on constant segments.
    pub constant: f64,
    /// Absolute slack on midpoint-convexity inequalities.
    pub convex: f64,
    /// Relative increase allowed between neighbouring grid points.
    pub monotone: f64,
    /// Absolute slack on `r ≤ 1`.
    pub constraint: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            constant: 1e-8,
            convex: 1e-9,
            monotone: 1e-7,
            constraint: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub index: usize,
    pub label: String,
    pub kind: SegmentKind,
    pub scale: f64,
    pub grid_size: usize,
    pub start_loss: Option<f64>,
    pub end_loss: Option<f64>,
    /// Constant segments only.
    pub max_loss_deviation: Option<f64>,
    /// Convex segments only.
    pub max_midpoint_violation: Option<f64>,
    /// Includes the step from the previous segment's last grid point.
    pub max_monotonicity_violation: f64,
    pub max_constraint_excess: f64,
    /// Jump from the previous segment's end (zero when continuous).
    pub continuity_gap: f64,
    pub evaluation_error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverallFlags {
    pub constant: bool,
    pub convex: bool,
    pub monotone: bool,
    pub feasible: bool,
    pub continuous: bool,
    pub evaluated: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub seed: Option<u64>,
    pub grid_size: usize,
    pub tolerances: Tolerances,
    pub segments: Vec<SegmentReport>,
    pub start_loss: Option<f64>,
    pub end_loss: Option<f64>,
    pub max_loss_deviation: f64,
    pub max_midpoint_violation: f64,
    pub max_monotonicity_violation: f64,
    pub max_constraint_excess: f64,
    pub max_continuity_gap: f64,
    pub overall: OverallFlags,
    /// Wall time; left out of the serialized report so it stays byte-stable.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl VerificationReport {
    /// Pass flags implied by the recorded maxima and tolerances.
    pub fn recompute_flags(&self) -> OverallFlags {
        let t = &self.tolerances;
        let constant = self
            .segments
            .iter()
            .all(|s| s.max_loss_deviation.is_none_or(|d| d <= t.constant));
        let convex = self
            .segments
            .iter()
            .all(|s| s.max_midpoint_violation.is_none_or(|d| d <= t.convex));
        let monotone = self
            .segments
            .iter()
            .all(|s| s.max_monotonicity_violation <= t.monotone);
        let feasible = self
            .segments
            .iter()
            .all(|s| s.max_constraint_excess <= t.constraint);
        let continuous = self.segments.iter().all(|s| s.continuity_gap == 0.0);
        let evaluated = self.segments.iter().all(|s| s.evaluation_error.is_none());
        OverallFlags {
            constant,
            convex,
            monotone,
            feasible,
            continuous,
            evaluated,
            pass: constant && convex && monotone && feasible && continuous && evaluated,
        }
    }

    pub fn passed(&self) -> bool {
        self.overall.pass
    }
}

/// `(global time, loss)` pairs over the concatenated grid; segment `k`
/// covers global times `[k, k+1]`.
pub type LossProfile = Vec<(f64, f64)>;

/// Samples every segment on a uniform grid and records how far each claim
/// is from failing.
#[allow(clippy::too_many_arguments)]
pub fn verify_path(
    path: &CompositePath,
    arch: &Architecture,
    data: &Dataset,
    loss: LossKind,
    spec: &ConstraintSpec,
    grid_size: usize,
    tols: Tolerances,
    seed: Option<u64>,
) -> Result<VerificationReport> {
    verify_path_with_profile(path, arch, data, loss, spec, grid_size, tols, seed).map(|v| v.0)
}

/// [`verify_path`] plus the sampled loss profile.
#[allow(clippy::too_many_arguments)]
pub fn verify_path_with_profile(
    path: &CompositePath,
    arch: &Architecture,
    data: &Dataset,
    loss: LossKind,
    spec: &ConstraintSpec,
    grid_size: usize,
    tols: Tolerances,
    seed: Option<u64>,
) -> Result<(VerificationReport, LossProfile)> {
    if grid_size < 3 {
        return Err(Error::parameter(format!(
            "verification needs at least 3 grid points per segment, got {grid_size}"
        )));
    }
    let clock = Instant::now();
    let gaps = path.continuity_gaps()?;
    let times = grid_times(grid_size);
    let mut segments = Vec::with_capacity(path.len());
    let mut profile = LossProfile::new();
    let mut previous_last: Option<f64> = None;

    for (index, seg) in path.segments().iter().enumerate() {
        let continuity_gap = if index == 0 { 0.0 } else { gaps[index - 1] };
        let evaluated = loss_profile(seg, arch, data, loss, grid_size)
            .and_then(|v| Ok((v, constraint_profile(seg, spec, grid_size)?)));
        let (values, constraints) = match evaluated {
            Ok(pair) => pair,
            Err(e) => {
                segments.push(SegmentReport {
                    index,
                    label: seg.label.clone(),
                    kind: seg.kind,
                    scale: seg.scale,
                    grid_size,
                    start_loss: None,
                    end_loss: None,
                    max_loss_deviation: None,
                    max_midpoint_violation: None,
                    max_monotonicity_violation: 0.0,
                    max_constraint_excess: 0.0,
                    continuity_gap,
                    evaluation_error: Some(e.to_string()),
                });
                previous_last = None;
                continue;
            }
        };
        let mut monotone = max_monotonicity_violation(&values);
        if let Some(last) = previous_last {
            monotone = monotone.max((values[0] - last) / (1.0 + last.abs()));
        }
        previous_last = values.last().copied();
        let excess = constraints.iter().map(|r| r - 1.0).fold(0.0, f64::max);
        profile.extend(
            times
                .iter()
                .zip(&values)
                .map(|(t, v)| (index as f64 + t, *v)),
        );
        segments.push(SegmentReport {
            index,
            label: seg.label.clone(),
            kind: seg.kind,
            scale: seg.scale,
            grid_size,
            start_loss: Some(values[0]),
            end_loss: Some(values[values.len() - 1]),
            max_loss_deviation: (seg.kind == SegmentKind::Constant)
                .then(|| max_relative_deviation(&values)),
            max_midpoint_violation: (seg.kind == SegmentKind::Convex)
                .then(|| max_midpoint_violation(&values)),
            max_monotonicity_violation: monotone,
            max_constraint_excess: excess,
            continuity_gap,
            evaluation_error: None,
        });
    }

    let fold = |f: &dyn Fn(&SegmentReport) -> f64| segments.iter().map(f).fold(0.0, f64::max);
    let mut report = VerificationReport {
        seed,
        grid_size,
        tolerances: tols,
        start_loss: segments.first().and_then(|s| s.start_loss),
        end_loss: segments.last().and_then(|s| s.end_loss),
        max_loss_deviation: fold(&|s| s.max_loss_deviation.unwrap_or(0.0)),
        max_midpoint_violation: fold(&|s| s.max_midpoint_violation.unwrap_or(0.0)),
        max_monotonicity_violation: fold(&|s| s.max_monotonicity_violation),
        max_constraint_excess: fold(&|s| s.max_constraint_excess),
        max_continuity_gap: fold(&|s| s.continuity_gap),
        segments,
        overall: OverallFlags {
            constant: false,
            convex: false,
            monotone: false,
            feasible: false,
            continuous: false,
            evaluated: false,
            pass: false,
        },
        elapsed: Duration::ZERO,
    };
    report.overall = report.recompute_flags();
    report.elapsed = clock.elapsed();
    Ok((report, profile))
}

/// Max deviation found by a randomized identity check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub trials: usize,
    pub seed: u64,
    pub max_deviation: f64,
    pub tol: f64,
    pub pass: bool,
}

fn random_input(rng: &mut ChaCha8Rng, d: usize) -> Array1<f64> {
    (0..d)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Compares `g_{[Θ',Γ']_{c1,c2}}(x)` with `c1 g_{Θ'}(x) + c2 g_{Γ'}(x)` for
/// random `c1, c2 ∈ [-2, 2]` and Gaussian `x`.
pub fn verify_block_identity(
    upper: &NetworkParams,
    lower: &NetworkParams,
    arch: &Architecture,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<IdentityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let c1 = rng.random_range(-2.0..=2.0);
        let c2 = rng.random_range(-2.0..=2.0);
        let x = random_input(&mut rng, arch.input_dim());
        let mixed = forward(arch, &mix_block(upper, lower, c1, c2)?, x.view())?;
        let separate = forward(arch, upper, x.view())? * c1 + forward(arch, lower, x.view())? * c2;
        worst = worst.max((mixed - separate).iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    Ok(IdentityReport {
        trials,
        seed,
        max_deviation: worst,
        tol,
        pass: worst <= tol,
    })
}

/// Risk change under random relabelings of the hidden units.
pub fn verify_symmetry(
    arch: &Architecture,
    params: &NetworkParams,
    data: &Dataset,
    loss: LossKind,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<IdentityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = empirical_risk(arch, params, data, loss)?;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let perms: Vec<Permutation> = arch
            .hidden_widths()
            .iter()
            .map(|&p| Permutation::random(p, &mut rng))
            .collect();
        let permuted = permute_hidden(params, &perms)?;
        worst = worst.max((empirical_risk(arch, &permuted, data, loss)? - base).abs());
    }
    Ok(IdentityReport {
        trials,
        seed,
        max_deviation: worst,
        tol,
        pass: worst <= tol,
    })
}

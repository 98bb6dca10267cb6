//! Piecewise-affine parameter paths and the escape-path builder.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blocks::{
    check_shared_hidden, embed_sum_hidden, to_block, to_block_linear, BlockResult, BlockSide,
    ReparamStep,
};
use crate::error::{Error, Result};
use crate::netcore::{Architecture, Dataset, NetworkParams};
use crate::objective::{constraint_value, empirical_risk, ConstraintSpec, LossKind};

/// How the loss is expected to behave along a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Constant,
    Convex,
}

/// `t ↦ (1 - c t)·start + c t·end` for `t ∈ [0, 1]`, `c = scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSegment {
    pub start: NetworkParams,
    pub end: NetworkParams,
    pub kind: SegmentKind,
    pub scale: f64,
    pub label: String,
}

impl PathSegment {
    pub fn new(
        start: NetworkParams,
        end: NetworkParams,
        kind: SegmentKind,
        scale: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if !start.same_shape(&end) {
            return Err(Error::structural("segment endpoints have different shapes"));
        }
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(Error::parameter(format!(
                "scale must lie in (0, 1], got {scale}"
            )));
        }
        Ok(Self {
            start,
            end,
            kind,
            scale,
            label: label.into(),
        })
    }

    pub fn constant(
        start: NetworkParams,
        end: NetworkParams,
        label: impl Into<String>,
    ) -> Result<Self> {
        Self::new(start, end, SegmentKind::Constant, 1.0, label)
    }

    pub fn from_step(step: &ReparamStep) -> Self {
        PathSegment {
            start: step.before.clone(),
            end: step.after.clone(),
            kind: SegmentKind::Constant,
            scale: 1.0,
            label: step_label(step),
        }
    }

    /// The same segment run backwards; only defined for unrestricted segments.
    pub fn reversed(&self) -> Result<Self> {
        if self.scale != 1.0 {
            return Err(Error::precondition(
                "a restricted segment cannot be reversed",
            ));
        }
        Ok(PathSegment {
            start: self.end.clone(),
            end: self.start.clone(),
            kind: self.kind,
            scale: 1.0,
            label: format!("{} (reversed)", self.label),
        })
    }

    /// The point reached at `t = 1`.
    pub fn end_point(&self) -> NetworkParams {
        segment_at(self, 1.0).expect("t = 1 is in range")
    }
}

fn step_label(step: &ReparamStep) -> String {
    let kind = serde_json::to_value(step.kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    format!("{kind} theta^{}", step.layer)
}

/// Segments traversed one after the other.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompositePath {
    segments: Vec<PathSegment>,
}

/// Largest allowed jump between consecutive segments, relative to the
/// magnitude of the parameters.
pub const CONTINUITY_TOL: f64 = 1e-12;

impl CompositePath {
    /// Checks that each segment starts where the previous one ends.
    pub fn new(segments: Vec<PathSegment>) -> Result<Self> {
        let path = Self::from_segments_unchecked(segments);
        for (k, gap) in path.continuity_gaps()?.into_iter().enumerate() {
            if gap > 0.0 {
                return Err(Error::structural(format!(
                    "segment {} does not start where segment {k} ends (gap {gap})",
                    k + 1
                )));
            }
        }
        Ok(path)
    }

    /// Skips the continuity check so that broken paths can still be loaded
    /// and reported on.
    pub fn from_segments_unchecked(segments: Vec<PathSegment>) -> Self {
        Self { segments }
    }

    /// For every join, the max-abs jump in excess of [`CONTINUITY_TOL`]
    /// (zero when the join is continuous).
    pub fn continuity_gaps(&self) -> Result<Vec<f64>> {
        self.segments
            .windows(2)
            .map(|w| {
                let end = w[0].end_point();
                let jump = end.max_abs_diff(&w[1].start)?;
                let allowed = CONTINUITY_TOL * (1.0 + end.max_abs().max(w[1].start.max_abs()));
                Ok(if jump > allowed { jump } else { 0.0 })
            })
            .collect()
    }

    pub fn segments(&self) -> &[PathSegment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn start(&self) -> Option<&NetworkParams> {
        self.segments.first().map(|s| &s.start)
    }

    pub fn end_point(&self) -> Option<NetworkParams> {
        self.segments.last().map(PathSegment::end_point)
    }

    pub fn push(&mut self, segment: PathSegment) {
        self.segments.push(segment);
    }

    /// Both paths one after the other.
    pub fn concat(&self, other: &CompositePath) -> Result<CompositePath> {
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        CompositePath::new(segments)
    }
}

/// Parameter at local time `t ∈ [0, 1]`.
pub fn segment_at(seg: &PathSegment, t: f64) -> Result<NetworkParams> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::parameter(format!("t must lie in [0, 1], got {t}")));
    }
    if t == 0.0 {
        return Ok(seg.start.clone());
    }
    seg.start.lerp(&seg.end, seg.scale * t)
}

/// Uniform grid `0, 1/(g-1), …, 1`.
pub fn grid_times(grid_size: usize) -> Vec<f64> {
    if grid_size < 2 {
        return vec![0.0];
    }
    (0..grid_size)
        .map(|k| k as f64 / (grid_size - 1) as f64)
        .collect()
}

/// Risk at every grid point of the segment, evaluated in parallel.
pub fn loss_profile(
    seg: &PathSegment,
    arch: &Architecture,
    data: &Dataset,
    loss: LossKind,
    grid_size: usize,
) -> Result<Vec<f64>> {
    grid_times(grid_size)
        .into_par_iter()
        .map(|t| empirical_risk(arch, &segment_at(seg, t)?, data, loss))
        .collect()
}

/// Constraint value at every grid point of the segment.
pub fn constraint_profile(
    seg: &PathSegment,
    spec: &ConstraintSpec,
    grid_size: usize,
) -> Result<Vec<f64>> {
    grid_times(grid_size)
        .into_par_iter()
        .map(|t| Ok(constraint_value(&segment_at(seg, t)?, spec)))
        .collect()
}

/// `max_k |L_k - L_0| / (1 + |L_0|)`.
pub fn max_relative_deviation(values: &[f64]) -> f64 {
    let Some(&first) = values.first() else {
        return 0.0;
    };
    values
        .iter()
        .map(|v| (v - first).abs() / (1.0 + first.abs()))
        .fold(0.0, f64::max)
}

/// Largest `L((t_i + t_j)/2) - (L_i + L_j)/2` over grid pairs whose midpoint
/// is again a grid point; zero when all midpoint inequalities hold.
pub fn max_midpoint_violation(values: &[f64]) -> f64 {
    let g = values.len();
    let mut worst: f64 = 0.0;
    for i in 0..g {
        for j in (i + 2..g).step_by(2) {
            let mid = values[(i + j) / 2];
            worst = worst.max(mid - 0.5 * (values[i] + values[j]));
        }
    }
    worst
}

/// Largest relative increase `(L_{k+1} - L_k) / (1 + |L_k|)`, or zero.
pub fn max_monotonicity_violation(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| (w[1] - w[0]) / (1.0 + w[0].abs()))
        .fold(0.0, f64::max)
}

/// Whether the risk is constant along the segment on the grid.
pub fn is_path_constant(
    seg: &PathSegment,
    arch: &Architecture,
    data: &Dataset,
    loss: LossKind,
    grid_size: usize,
    tol: f64,
) -> Result<bool> {
    if grid_size < 2 {
        return Err(Error::parameter(
            "a constancy check needs at least 2 grid points",
        ));
    }
    let values = loss_profile(seg, arch, data, loss, grid_size)?;
    Ok(max_relative_deviation(&values) <= tol)
}

/// Whether every sampled midpoint-convexity inequality holds within `tol`.
pub fn is_path_convex(
    seg: &PathSegment,
    arch: &Architecture,
    data: &Dataset,
    loss: LossKind,
    grid_size: usize,
    tol: f64,
) -> Result<bool> {
    if grid_size < 3 {
        return Err(Error::parameter(
            "a convexity check needs at least 3 grid points",
        ));
    }
    let values = loss_profile(seg, arch, data, loss, grid_size)?;
    Ok(max_midpoint_violation(&values) <= tol)
}

/// The segment from `Θ'` to `Γ'` that moves only the outer matrix.
pub fn convex_outer_segment(upper: &NetworkParams, lower: &NetworkParams) -> Result<PathSegment> {
    check_shared_hidden(upper, lower)?;
    PathSegment::new(
        upper.clone(),
        lower.clone(),
        SegmentKind::Convex,
        1.0,
        "mix outer layer",
    )
}

/// Resolution of the minimizer search in [`restrict_profile`].
pub const ARGMIN_RESOLUTION: f64 = 1e-10;

/// Given a convex profile `f` on `[0, 1]`, returns `c ∈ (0, 1]` such that
/// `t ↦ f(c t)` is nonincreasing: a minimizer of `f`, moved to `1` when
/// `f(1) ≤ f(c) + tol`.
pub fn restrict_profile(f: impl Fn(f64) -> Result<f64>, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > ARGMIN_RESOLUTION {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        // ties move right so that flat stretches end at the largest minimizer
        if f(m1)? < f(m2)? {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let c = (0.5 * (lo + hi)).max(ARGMIN_RESOLUTION);
    if f(1.0)? <= f(c)? + tol {
        Ok(1.0)
    } else {
        Ok(c)
    }
}

/// Restricts a convex segment to its decreasing part.
pub fn restrict_nonincreasing(
    seg: &PathSegment,
    arch: &Architecture,
    data: &Dataset,
    loss: LossKind,
    grid_size: usize,
    tol: f64,
) -> Result<PathSegment> {
    if !is_path_convex(seg, arch, data, loss, grid_size, tol)? {
        return Err(Error::precondition(
            "the loss is not convex along the segment; no restriction is guaranteed",
        ));
    }
    let c = restrict_profile(
        |t| empirical_risk(arch, &segment_at(seg, t)?, data, loss),
        tol,
    )?;
    let mut out = seg.clone();
    out.scale = seg.scale * c;
    Ok(out)
}

/// Minimal width `2m(n+1)^l`, or `2m(n+1)` when every activation is linear.
pub fn required_width(m: usize, n: usize, l: usize, linear: bool) -> usize {
    let levels = if linear { 1 } else { l };
    2 * m * (n + 1).pow(levels as u32)
}

/// Knobs of [`build_escape_path`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeOptions {
    /// Use layer merging (identity activations only) and the smaller width bound.
    pub linear: bool,
    /// Grid used for the convexity check before restricting.
    pub grid_size: usize,
    /// Tolerance of the convexity check and of snapping the restriction to 1.
    pub tol: f64,
}

impl Default for EscapeOptions {
    fn default() -> Self {
        Self {
            linear: false,
            grid_size: 2001,
            tol: 1e-9,
        }
    }
}

/// A built escape path with the intermediate block parameters.
#[derive(Debug, Clone)]
pub struct EscapePath {
    pub path: CompositePath,
    pub upper: BlockResult,
    pub lower: BlockResult,
    /// Restriction factor of the convex segment.
    pub c: f64,
    /// Whether the path runs all the way to the target.
    pub reached_target: bool,
    pub s: usize,
}

/// Builds a path from `start` towards `target` along which the risk does
/// not increase. It ends at `target` when the target is the lowest point on
/// the convex middle segment and otherwise at that segment's minimizer,
/// whose risk is at most the target's.
#[allow(clippy::too_many_arguments)]
pub fn build_escape_path(
    arch: &Architecture,
    start: &NetworkParams,
    target: &NetworkParams,
    data: &Dataset,
    loss: LossKind,
    spec: &ConstraintSpec,
    options: EscapeOptions,
) -> Result<EscapePath> {
    start.check_shapes(arch)?;
    target.check_shapes(arch)?;
    data.check_against(arch)?;
    loss.check_labels(data.y())?;
    if options.linear && !arch.is_linear() {
        return Err(Error::capability(
            "the linear construction needs identity activations in every hidden layer",
        ));
    }
    let (m, n, l) = (arch.output_dim(), data.n(), arch.depth());
    let need = required_width(m, n, l, options.linear);
    if arch.min_width() < need {
        return Err(Error::capability(format!(
            "minimal width {} is below the required {need} = 2m(n+1){} for m={m}, n={n}, l={l}",
            arch.min_width(),
            if options.linear {
                String::new()
            } else {
                format!("^{l}")
            }
        )));
    }
    for (name, p) in [("start", start), ("target", target)] {
        let r = constraint_value(p, spec);
        if r > 1.0 + 1e-9 {
            return Err(Error::precondition(format!(
                "{name} is infeasible: r = {r} > 1"
            )));
        }
    }

    let reparam = if options.linear {
        to_block_linear
    } else {
        to_block
    };
    let upper = reparam(arch, start, data, spec, BlockSide::Upper)?;
    let lower = reparam(arch, target, data, spec, BlockSide::Lower)?;
    let s = upper.s;
    let (theta, gamma) = embed_sum_hidden(&upper.params, &lower.params, s)?;

    let mut segments: Vec<PathSegment> = upper.steps.iter().map(PathSegment::from_step).collect();
    segments.push(PathSegment::constant(
        upper.params.clone(),
        theta.clone(),
        "embed upper block",
    )?);
    let convex = convex_outer_segment(&theta, &gamma)?;
    let restricted =
        restrict_nonincreasing(&convex, arch, data, loss, options.grid_size, options.tol)?;
    let c = restricted.scale;
    segments.push(restricted);
    let reached_target = c == 1.0;
    if reached_target {
        segments.push(PathSegment::constant(
            gamma,
            lower.params.clone(),
            "unembed lower block",
        )?);
        for step in lower.steps.iter().rev() {
            segments.push(PathSegment::from_step(step).reversed()?);
        }
    }
    Ok(EscapePath {
        path: CompositePath::new(segments)?,
        upper,
        lower,
        c,
        reached_target,
        s,
    })
}

//! Global-minimum oracles used as path targets and as test references.

use nalgebra::DMatrix;
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{layer_input, Architecture, Dataset, NetworkParams};
use crate::objective::{
    constraint_value, empirical_risk, risk_of_outputs, ConstraintSpec, LossKind,
};

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_TOL: f64 = 1e-10;
/// Largest parameter count [`brute_force_min`] accepts.
pub const BRUTE_FORCE_MAX_PARAMS: usize = 8;
const BRUTE_FORCE_MAX_POINTS: u128 = 200_000_000;
const SUBGRADIENT_MAX_ITERS: usize = 100_000;
const SUBGRADIENT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    OuterSolve,
    BruteForce,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub params: NetworkParams,
    pub achieved_risk: f64,
    pub method: OracleMethod,
    /// Outer solve: normal-equations residual (squared loss) or final
    /// subgradient norm. Brute force: grid resolution.
    pub certificate: f64,
    /// Rank of the feature matrix (outer solve only).
    pub rank: Option<usize>,
}

/// Keeps the inner matrices `Θ^0, …, Θ^{l-1}` fixed and minimizes the risk
/// over the outer matrix, which is a convex problem in the features
/// `Z = f^l[Θ^{l-1} ⋯ f^1[Θ^0 X]]`.
///
/// Squared loss is solved exactly by the minimum-norm least-squares solution
/// `Y Z⁺`; the other losses by subgradient descent with steps `∝ 1/√k`.
pub fn outer_layer_solve(
    arch: &Architecture,
    inner: &[Array2<f64>],
    data: &Dataset,
    loss: LossKind,
) -> Result<OracleResult> {
    let l = arch.depth();
    if inner.len() != l {
        return Err(Error::structural(format!(
            "depth {l} needs {l} inner matrices, got {}",
            inner.len()
        )));
    }
    data.check_against(arch)?;
    loss.check_labels(data.y())?;
    let mut mats = inner.to_vec();
    mats.push(Array2::zeros(arch.matrix_shape(l)));
    let zero_outer = NetworkParams::new(mats)?;
    zero_outer.check_shapes(arch)?;
    let z = layer_input(arch, &zero_outer, data.x().view(), l)?;
    let rank = feature_rank(&z);

    let (outer, certificate) = match loss {
        LossKind::Squared => {
            let outer = least_squares_outer(&z, data.y());
            let residual = (outer.dot(&z) - data.y()).dot(&z.t());
            (outer, residual.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
        }
        _ => subgradient_outer(&z, data.y(), loss)?,
    };
    let mut mats = zero_outer.into_matrices();
    mats[l] = outer;
    let params = NetworkParams::new(mats)?;
    let achieved_risk = empirical_risk(arch, &params, data, loss)?;
    Ok(OracleResult {
        params,
        achieved_risk,
        method: OracleMethod::OuterSolve,
        certificate,
        rank: Some(rank),
    })
}

fn to_dmatrix(m: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

/// Numerical rank of `z` with relative threshold [`RANK_TOL`].
pub fn feature_rank(z: &Array2<f64>) -> usize {
    let sv = to_dmatrix(z).singular_values();
    let top = sv.iter().fold(0.0_f64, |m, v| m.max(*v));
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|v| **v > RANK_TOL * top).count()
}

fn least_squares_outer(z: &Array2<f64>, y: &Array2<f64>) -> Array2<f64> {
    let zm = to_dmatrix(z);
    let svd = zm.svd(true, true);
    let top = svd.singular_values.iter().fold(0.0_f64, |m, v| m.max(*v));
    if top == 0.0 {
        return Array2::zeros((y.nrows(), z.nrows()));
    }
    let pinv = svd
        .pseudo_inverse(RANK_TOL * top)
        .expect("u and v were computed");
    let pinv = Array2::from_shape_fn((pinv.nrows(), pinv.ncols()), |(i, j)| pinv[(i, j)]);
    y.dot(&pinv)
}

fn loss_gradient(loss: LossKind, a: f64, b: f64) -> f64 {
    match loss {
        LossKind::Squared => 2.0 * (a - b),
        LossKind::Absolute => (a - b).signum() * f64::from(a != b),
        LossKind::Logistic => -(1.0 + b) / (1.0 + a) + (1.0 - b) / (1.0 - a),
        LossKind::Hinge => {
            if 1.0 - a * b > 0.0 {
                -b
            } else {
                0.0
            }
        }
    }
}

fn subgradient_outer(
    z: &Array2<f64>,
    y: &Array2<f64>,
    loss: LossKind,
) -> Result<(Array2<f64>, f64)> {
    let (m, p) = (y.nrows(), z.nrows());
    let eta0 = 1.0 / (1.0 + z.iter().map(|v| v * v).sum::<f64>().sqrt());
    let gradient = |w: &Array2<f64>| -> Array2<f64> {
        let pred = w.dot(z);
        let g = Array2::from_shape_fn(pred.dim(), |(i, k)| {
            loss_gradient(loss, pred[[i, k]], y[[i, k]])
        });
        g.dot(&z.t())
    };
    let risk = |w: &Array2<f64>| risk_of_outputs(loss, &w.dot(z), y);

    let mut w = Array2::zeros((m, p));
    let mut best = (risk(&w)?, w.clone(), f64::INFINITY);
    for k in 1..=SUBGRADIENT_MAX_ITERS {
        let g = gradient(&w);
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let current = risk(&w)?;
        if current <= best.0 {
            best = (current, w.clone(), gnorm);
        }
        if gnorm <= SUBGRADIENT_TOL {
            break;
        }
        let mut step = eta0 / (k as f64).sqrt() / gnorm.max(1.0);
        // logistic: backtrack until every prediction stays inside (-1, 1)
        loop {
            let next = &w - &(&g * step);
            if risk(&next).is_ok() {
                w = next;
                break;
            }
            step *= 0.5;
            if step < 1e-300 {
                break;
            }
        }
    }
    Ok((best.1, best.2))
}

/// Exhaustive search over the grid `{-bound + k·resolution}` in every
/// coordinate, keeping the feasible point of least risk. Ties go to the
/// first grid point in lexicographic order.
pub fn brute_force_min(
    arch: &Architecture,
    data: &Dataset,
    loss: LossKind,
    spec: &ConstraintSpec,
    resolution: f64,
    bound: f64,
) -> Result<OracleResult> {
    let count = arch.parameter_count();
    if count > BRUTE_FORCE_MAX_PARAMS {
        return Err(Error::capability(format!(
            "brute force handles at most {BRUTE_FORCE_MAX_PARAMS} parameters, architecture has {count}"
        )));
    }
    if !(resolution > 0.0 && bound >= 0.0 && resolution.is_finite() && bound.is_finite()) {
        return Err(Error::parameter(format!(
            "resolution must be positive and bound nonnegative, got {resolution}, {bound}"
        )));
    }
    data.check_against(arch)?;
    loss.check_labels(data.y())?;
    let per_axis = (2.0 * bound / resolution + 1e-9).floor() as usize + 1;
    let total = (per_axis as u128).pow(count as u32);
    if total > BRUTE_FORCE_MAX_POINTS {
        return Err(Error::capability(format!(
            "grid of {total} points exceeds the brute-force budget of {BRUTE_FORCE_MAX_POINTS}"
        )));
    }
    let total = total as u64;
    let shapes: Vec<(usize, usize)> = (0..=arch.depth()).map(|j| arch.matrix_shape(j)).collect();
    let decode = |mut index: u64| -> NetworkParams {
        let mut values = vec![0.0; count];
        for v in values.iter_mut().rev() {
            *v = -bound + (index % per_axis as u64) as f64 * resolution;
            index /= per_axis as u64;
        }
        let mut offset = 0;
        let mats = shapes
            .iter()
            .map(|&(r, c)| {
                let m = Array2::from_shape_vec((r, c), values[offset..offset + r * c].to_vec())
                    .expect("sizes add up");
                offset += r * c;
                m
            })
            .collect();
        NetworkParams::new(mats).expect("grid points are finite")
    };

    let best = (0..total)
        .into_par_iter()
        .filter_map(|i| {
            let p = decode(i);
            if constraint_value(&p, spec) > 1.0 {
                return None;
            }
            empirical_risk(arch, &p, data, loss).ok().map(|r| (r, i))
        })
        .reduce_with(|a, b| if (b.0, b.1) < (a.0, a.1) { b } else { a });
    let Some((risk, index)) = best else {
        return Err(Error::precondition(
            "no grid point satisfies the constraint and the loss domain",
        ));
    };
    Ok(OracleResult {
        params: decode(index),
        achieved_risk: risk,
        method: OracleMethod::BruteForce,
        certificate: resolution,
        rank: None,
    })
}

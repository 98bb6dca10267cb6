//! Sparse rewriting of signed combinations `v = Σ_j w_j z_j`.
//!
//! The weights are mapped to barycentric coordinates on the signed points
//! `sign(w_j)·z_j` after dividing by `ν = ||w||_1`, so the classical pivoting
//! argument applies: while more than `r+1` points are active, an affine
//! dependence `γ` among `r+2` of them (`Σγ = 0`, `Σγ_j p_j = 0`) lets one step
//! along `-γ` until a weight hits zero. Every step keeps both `v` and
//! `Σβ = 1` fixed, so the result has the same `ℓ1` norm as the input.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::objective::lq_norm;

/// Relative pivot threshold of the null-space elimination.
const PIVOT_REL: f64 = 1e-10;
/// Relative threshold below which a barycentric weight counts as zero.
const ZERO_REL: f64 = 1e-12;

/// Rewrites `weights` so that at most `r+1` entries are nonzero while
/// `generators · weights` stays fixed. `generators` is `r × h`, column `j`
/// holding `z_j`.
pub fn reduce_combination(
    generators: &Array2<f64>,
    weights: &Array1<f64>,
    q: f64,
    tol: f64,
) -> Result<Array1<f64>> {
    let (r, h) = generators.dim();
    if weights.len() != h {
        return Err(Error::structural(format!(
            "{h} generators but {} weights",
            weights.len()
        )));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::parameter(format!("q must lie in (0, 1], got {q}")));
    }
    if !(tol >= 0.0) {
        return Err(Error::parameter(format!(
            "tol must be nonnegative, got {tol}"
        )));
    }
    if weights
        .iter()
        .chain(generators.iter())
        .any(|v| !v.is_finite())
    {
        return Err(Error::structural("non-finite generators or weights"));
    }
    let norm_q = lq_norm(weights.iter(), q);
    if norm_q > 1.0 + tol {
        return Err(Error::precondition(format!(
            "weights have l_{q} norm {norm_q} > 1"
        )));
    }

    let support = weights.iter().filter(|w| **w != 0.0).count();
    if support <= r + 1 {
        return Ok(weights.clone());
    }

    let nu: f64 = weights.iter().map(|w| w.abs()).sum();
    let mut beta: Vec<f64> = weights.iter().map(|w| w.abs() / nu).collect();
    let sign: Vec<f64> = weights.iter().map(|w| w.signum()).collect();

    let mut active: Vec<usize> = (0..h).filter(|&j| beta[j] > 0.0).collect();
    while active.len() > r + 1 {
        let idx = &active[..r + 2];
        let mut m = Array2::zeros((r + 1, r + 2));
        for (c, &j) in idx.iter().enumerate() {
            m[[0, c]] = 1.0;
            for i in 0..r {
                m[[i + 1, c]] = sign[j] * generators[[i, j]];
            }
        }
        let mut gamma = null_vector(&m);
        let gmax = gamma.iter().fold(0.0_f64, |a, g| a.max(g.abs()));
        if gamma.iter().all(|g| *g <= 0.0) {
            gamma.iter_mut().for_each(|g| *g = -*g);
        }

        let mut theta = f64::INFINITY;
        let mut hit = idx[0];
        for (c, &j) in idx.iter().enumerate() {
            if gamma[c] > 1e-14 * gmax {
                let ratio = beta[j] / gamma[c];
                if ratio < theta {
                    theta = ratio;
                    hit = j;
                }
            }
        }
        for (c, &j) in idx.iter().enumerate() {
            beta[j] -= theta * gamma[c];
        }
        beta[hit] = 0.0;

        let bmax = beta.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        let cut = ZERO_REL * bmax.max(1.0);
        for b in beta.iter_mut() {
            if *b <= cut {
                *b = 0.0;
            }
        }
        active.retain(|&j| beta[j] > 0.0);
    }

    let out: Array1<f64> = (0..h).map(|j| nu * sign[j] * beta[j]).collect();
    if q < 1.0 {
        let reduced = lq_norm(out.iter(), q);
        if reduced > 1.0 + tol {
            return Err(Error::ReductionFailure(format!(
                "reduced weights have l_{q} norm {reduced} > 1"
            )));
        }
    }
    Ok(out)
}

/// A nonzero vector in the kernel of a wide matrix, by Gauss-Jordan
/// elimination with full pivoting.
fn null_vector(m: &Array2<f64>) -> Vec<f64> {
    let (rows, cols) = m.dim();
    debug_assert!(rows < cols);
    let mut a = m.clone();
    let mut col_of: Vec<usize> = (0..cols).collect();
    let scale = a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let threshold = PIVOT_REL * scale;

    let mut rank = 0;
    while rank < rows {
        let (mut pi, mut pj, mut best) = (rank, rank, 0.0);
        for i in rank..rows {
            for j in rank..cols {
                if a[[i, j]].abs() > best {
                    best = a[[i, j]].abs();
                    pi = i;
                    pj = j;
                }
            }
        }
        if best <= threshold {
            break;
        }
        if pi != rank {
            for j in 0..cols {
                a.swap([pi, j], [rank, j]);
            }
        }
        if pj != rank {
            for i in 0..rows {
                a.swap([i, pj], [i, rank]);
            }
            col_of.swap(pj, rank);
        }
        let pivot = a[[rank, rank]];
        for j in 0..cols {
            a[[rank, j]] /= pivot;
        }
        for i in 0..rows {
            if i != rank {
                let factor = a[[i, rank]];
                if factor != 0.0 {
                    for j in 0..cols {
                        a[[i, j]] -= factor * a[[rank, j]];
                    }
                }
            }
        }
        rank += 1;
    }

    // Free variable at permuted position `rank` set to one, other free ones zero.
    let mut x = vec![0.0; cols];
    x[col_of[rank]] = 1.0;
    for i in 0..rank {
        x[col_of[i]] = -a[[i, rank]];
    }
    x
}

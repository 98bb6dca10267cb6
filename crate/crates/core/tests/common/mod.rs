//! Instance generators shared by the integration tests.
#![allow(dead_code)]

use lossescape::blocks::BlockSide;
use lossescape::objective::constraint_value;
use lossescape::{ActivationKind, Architecture, ConstraintSpec, Dataset, NetworkParams};
use ndarray::Array2;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const ACTIVATIONS: [ActivationKind; 4] = [
    ActivationKind::Identity,
    ActivationKind::Relu,
    ActivationKind::LeakyRelu { c: 0.1 },
    ActivationKind::Sigmoid,
];

pub fn gauss(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

pub fn activation(rng: &mut ChaCha8Rng) -> ActivationKind {
    *ACTIVATIONS.choose(rng).unwrap()
}

pub fn dataset(rng: &mut ChaCha8Rng, d: usize, m: usize, n: usize) -> Dataset {
    Dataset::new(gauss(rng, d, n), gauss(rng, m, n)).unwrap()
}

/// A random spec with `q ∈ {1, 2, ∞}`, or no constraint at all.
pub fn spec(rng: &mut ChaCha8Rng) -> ConstraintSpec {
    if rng.random_bool(0.25) {
        return ConstraintSpec::unconstrained();
    }
    let q = *[1.0, 2.0, f64::INFINITY].choose(rng).unwrap();
    ConstraintSpec::new(rng.random_range(0.05..1.0), rng.random_range(0.05..1.0), q).unwrap()
}

/// Scales into the feasible set when needed.
pub fn feasible(p: NetworkParams, spec: &ConstraintSpec) -> NetworkParams {
    let r = constraint_value(&p, spec);
    if r > 1.0 {
        p.scaled(1.0 / r)
    } else {
        p
    }
}

/// Random parameters vanishing outside the `s`-block on `side`, written
/// out directly from the definition.
pub fn random_block(
    arch: &Architecture,
    s: usize,
    side: BlockSide,
    rng: &mut ChaCha8Rng,
) -> NetworkParams {
    let dims = arch.dims();
    let l = arch.depth();
    let out = |p: usize, i: usize| match side {
        BlockSide::Upper => i >= s,
        BlockSide::Lower => i < p - s,
    };
    let mats = (0..=l)
        .map(|j| {
            let (rows, cols) = arch.matrix_shape(j);
            let mut m = gauss(rng, rows, cols);
            for ((i, k), v) in m.indexed_iter_mut() {
                let row_out = j < l && out(dims[j + 1], i);
                let col_out = j > 0 && out(dims[j], k);
                if row_out || col_out {
                    *v = 0.0;
                }
            }
            m
        })
        .collect();
    NetworkParams::new(mats).unwrap()
}

/// Rank by Gaussian elimination with partial pivoting.
pub fn elimination_rank(z: &Array2<f64>, rel_tol: f64) -> usize {
    let mut a = z.clone();
    let (rows, cols) = a.dim();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let (piv, val) = (rank..rows)
            .map(|r| (r, a[[r, c]].abs()))
            .fold((rank, -1.0), |b, x| if x.1 > b.1 { x } else { b });
        if val <= rel_tol * scale {
            continue;
        }
        for k in 0..cols {
            a.swap([rank, k], [piv, k]);
        }
        for r in rank + 1..rows {
            let f = a[[r, c]] / a[[rank, c]];
            for k in c..cols {
                a[[r, k]] -= f * a[[rank, k]];
            }
        }
        rank += 1;
    }
    rank
}

pub fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

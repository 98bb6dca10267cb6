//! Block parameters and the loss-preserving reparametrizations that produce
//! them.
//!
//! Every transformation here is emitted as a list of [`ReparamStep`]s. Each
//! step changes the parameters along a straight segment on which the network
//! outputs on the bound dataset do not move and no row norm grows, so the
//! steps can be chained into a constant-loss path. Hidden-unit relabelings
//! are not done in one jump (a straight line towards a permuted copy changes
//! the loss); a unit is moved by copying its incoming row into a dead slot,
//! sliding its outgoing column over, and clearing the old row.

use std::ops::Range;

use ndarray::{s, Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::caratheodory::reduce_combination;
use crate::error::{Error, Result};
use crate::netcore::{layer_input, Architecture, Dataset, NetworkParams, Permutation};
use crate::objective::{constraint_value, lq_norm, ConstraintSpec};

const FEASIBILITY_TOL: f64 = 1e-9;
const REDUCTION_TOL: f64 = 1e-9;

/// Which corner of each hidden layer a block occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockSide {
    /// The first `s` units.
    Upper,
    /// The last `s` units.
    Lower,
}

impl BlockSide {
    /// Index range of a window of `k` units in a layer of width `p`.
    pub fn window(&self, p: usize, k: usize) -> Range<usize> {
        let k = k.min(p);
        match self {
            BlockSide::Upper => 0..k,
            BlockSide::Lower => p - k..p,
        }
    }
}

impl std::str::FromStr for BlockSide {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upper" => Ok(BlockSide::Upper),
            "lower" => Ok(BlockSide::Lower),
            other => Err(Error::Parse(format!("unknown block side '{other}'"))),
        }
    }
}

/// What a [`ReparamStep`] does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    /// Rows of `Θ^j` replaced by sparse rewrites with the same outputs.
    Sparsify,
    /// Rows of `Θ^j` belonging to dead units scaled to zero.
    ClearRows,
    /// Dead rows of `Θ^j` filled with copies of live rows.
    CopyRows,
    /// Columns of `Θ^j` slid onto duplicated units.
    ShiftColumns,
    /// Dead rows of `Θ^j` filled with merged products of two layers.
    MergeRows,
    /// Rows of `Θ^j` redirected to merged units.
    RouteRows,
}

/// One straight segment `before → after` that changes a single matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ReparamStep {
    pub before: NetworkParams,
    pub after: NetworkParams,
    /// Index `j` of the matrix `Θ^j` that changes.
    pub layer: usize,
    pub kind: StepKind,
    /// Relabeling of the hidden layer that `Θ^j` reads from, if any.
    pub permutation: Option<Permutation>,
}

/// Outcome of [`to_block`] and [`to_block_linear`].
#[derive(Debug, Clone)]
pub struct BlockResult {
    pub params: NetworkParams,
    pub steps: Vec<ReparamStep>,
    pub s: usize,
}

fn outside(side: BlockSide, p: usize, s: usize, idx: usize) -> bool {
    match side {
        BlockSide::Upper => idx >= s,
        BlockSide::Lower => idx < p.saturating_sub(s),
    }
}

/// Checks the zero pattern of an `s`-block parameter exactly.
pub fn is_block(params: &NetworkParams, s: usize, side: BlockSide) -> bool {
    let l = params.depth();
    params.matrices().iter().enumerate().all(|(j, m)| {
        let (rows, cols) = m.dim();
        m.indexed_iter().all(|((i, k), v)| {
            if *v == 0.0 {
                return true;
            }
            let bad_row = j < l && outside(side, rows, s, i);
            let bad_col = j > 0 && outside(side, cols, s, k);
            !(bad_row || bad_col)
        })
    })
}

/// `m(n+1)^l`, the block size reached by [`to_block`].
pub fn block_size(m: usize, n: usize, l: usize) -> Result<usize> {
    (0..l)
        .try_fold(m, |acc, _| acc.checked_mul(n + 1))
        .ok_or_else(|| Error::capability(format!("m(n+1)^l overflows for m={m}, n={n}, l={l}")))
}

fn nonzero_columns(m: &Array2<f64>) -> Vec<bool> {
    m.axis_iter(Axis(1))
        .map(|c| c.iter().any(|v| *v != 0.0))
        .collect()
}

/// Rewrites every row of `a` with at most `r+1` nonzeros, where `r` is the
/// number of columns of `features`; `a · features` is unchanged.
fn sparsify_rows(a: &Array2<f64>, features: &Array2<f64>, q: f64) -> Result<Array2<f64>> {
    let generators = features.t().to_owned();
    let mut out = a.clone();
    for (k, row) in a.axis_iter(Axis(0)).enumerate() {
        let norm = lq_norm(row.iter(), q);
        if norm == 0.0 {
            continue;
        }
        let weights: Array1<f64> = row.mapv(|v| v / norm);
        let reduced = reduce_combination(&generators, &weights, q, REDUCTION_TOL)?;
        out.row_mut(k).assign(&(reduced * norm));
    }
    Ok(out)
}

/// Pairs every live unit outside `window` with a dead slot inside it.
fn plan_moves(live: &[bool], window: &Range<usize>) -> Result<Vec<(usize, usize)>> {
    let dead_inside: Vec<usize> = window.clone().filter(|&i| !live[i]).collect();
    let live_outside: Vec<usize> = (0..live.len())
        .filter(|&i| live[i] && !window.contains(&i))
        .collect();
    if live_outside.len() > dead_inside.len() {
        return Err(Error::ReductionFailure(format!(
            "{} live units do not fit into a window of {}",
            live.iter().filter(|b| **b).count(),
            window.len()
        )));
    }
    Ok(live_outside.into_iter().zip(dead_inside).collect())
}

fn transpositions(len: usize, moves: &[(usize, usize)]) -> Permutation {
    let mut map: Vec<usize> = (0..len).collect();
    for &(src, dst) in moves {
        map.swap(src, dst);
    }
    Permutation::new(map).expect("disjoint transpositions form a permutation")
}

/// Sparsifies the outer matrix `A` of a two-layer block `A f[B C]` and
/// relabels the middle units so that only a window of `u(r+1)` of them is
/// used. Returns `(A_p, B^p, p)` with the unused rows of `B^p` zeroed.
#[allow(clippy::too_many_arguments)]
pub fn sparsify_layer_pair(
    a: &Array2<f64>,
    b: &Array2<f64>,
    c: &Array2<f64>,
    activation: crate::ActivationKind,
    q_a: f64,
    q_b: f64,
    side: BlockSide,
) -> Result<(Array2<f64>, Array2<f64>, Permutation)> {
    let (u, v) = a.dim();
    if b.nrows() != v || c.nrows() != b.ncols() {
        return Err(Error::structural(format!(
            "shapes {:?}, {:?}, {:?} do not chain",
            a.dim(),
            b.dim(),
            c.dim()
        )));
    }
    if !(q_a > 0.0 && q_a <= 1.0) {
        return Err(Error::parameter(format!(
            "q_A must lie in (0, 1], got {q_a}"
        )));
    }
    if !(q_b > 0.0) {
        return Err(Error::parameter(format!(
            "q_B must lie in (0, inf], got {q_b}"
        )));
    }
    activation.validate()?;
    let k = u * (c.ncols() + 1);
    if v <= k {
        return Ok((a.clone(), b.clone(), Permutation::identity(v)));
    }
    let z = crate::netcore::apply_activation(activation, &b.dot(c))?;
    let reduced = sparsify_rows(a, &z, q_a)?;
    let window = side.window(v, k);
    let moves = plan_moves(&nonzero_columns(&reduced), &window)?;
    let perm = transpositions(v, &moves);
    let a_out = perm.permute_columns(&reduced);
    let mut b_out = perm.permute_rows(b);
    for i in (0..v).filter(|i| !window.contains(i)) {
        b_out.row_mut(i).fill(0.0);
    }
    Ok((a_out, b_out, perm))
}

struct Recorder {
    cur: NetworkParams,
    steps: Vec<ReparamStep>,
}

impl Recorder {
    fn push(
        &mut self,
        layer: usize,
        kind: StepKind,
        permutation: Option<Permutation>,
        edit: impl FnOnce(&mut Array2<f64>),
    ) {
        let mut next = self.cur.clone();
        edit(next.matrix_mut(layer));
        if next == self.cur {
            return;
        }
        let before = std::mem::replace(&mut self.cur, next);
        self.steps.push(ReparamStep {
            before,
            after: self.cur.clone(),
            layer,
            kind,
            permutation,
        });
    }

    fn clear_rows(&mut self, layer: usize, rows: &[usize]) {
        self.push(layer, StepKind::ClearRows, None, |m| {
            for &i in rows {
                m.row_mut(i).fill(0.0);
            }
        });
    }

    /// Moves the live units of hidden layer `j` into `window` and clears the
    /// incoming rows of every unit outside it.
    fn relocate(&mut self, j: usize, window: &Range<usize>) -> Result<()> {
        let live = nonzero_columns(self.cur.matrix(j));
        let moves = plan_moves(&live, window)?;
        if !moves.is_empty() {
            let dsts: Vec<usize> = moves.iter().map(|m| m.1).collect();
            self.clear_rows(j - 1, &dsts);
            self.push(j - 1, StepKind::CopyRows, None, |m| {
                for &(src, dst) in &moves {
                    let row = m.row(src).to_owned();
                    m.row_mut(dst).assign(&row);
                }
            });
            let perm = transpositions(live.len(), &moves);
            self.push(j, StepKind::ShiftColumns, Some(perm), |m| {
                for &(src, dst) in &moves {
                    let col = m.column(src).to_owned();
                    m.column_mut(dst).assign(&col);
                    m.column_mut(src).fill(0.0);
                }
            });
        }
        let outside: Vec<usize> = (0..live.len()).filter(|i| !window.contains(i)).collect();
        self.clear_rows(j - 1, &outside);
        Ok(())
    }

    fn sparsify(
        &mut self,
        arch: &Architecture,
        data: &Dataset,
        j: usize,
        rows: &[usize],
    ) -> Result<()> {
        let features = layer_input(arch, &self.cur, data.x().view(), j)?;
        let a = self.cur.matrix(j).select(Axis(0), rows);
        let reduced = sparsify_rows(&a, &features, 1.0)?;
        self.push(j, StepKind::Sparsify, None, |m| {
            for (k, &i) in rows.iter().enumerate() {
                m.row_mut(i).assign(&reduced.row(k));
            }
        });
        Ok(())
    }
}

fn check_common(
    arch: &Architecture,
    params: &NetworkParams,
    data: &Dataset,
    spec: &ConstraintSpec,
) -> Result<()> {
    params.check_shapes(arch)?;
    data.check_against(arch)?;
    let r = constraint_value(params, spec);
    if r > 1.0 + FEASIBILITY_TOL {
        return Err(Error::precondition(format!(
            "parameters are infeasible: r = {r} > 1"
        )));
    }
    Ok(())
}

/// Reparametrizes `params` into an `m(n+1)^l`-block parameter on `side`
/// along a constant-loss path, working from the outer layer inwards.
///
/// Needs `p^j ≥ m(n+1)^{l-j+1}` for every hidden layer `j`.
pub fn to_block(
    arch: &Architecture,
    params: &NetworkParams,
    data: &Dataset,
    spec: &ConstraintSpec,
    side: BlockSide,
) -> Result<BlockResult> {
    check_common(arch, params, data, spec)?;
    let (m, n, l) = (arch.output_dim(), data.n(), arch.depth());
    let s = block_size(m, n, l)?;
    let dims = arch.dims();
    for j in 1..=l {
        let need = block_size(m, n, l - j + 1)?;
        if dims[j] < need {
            return Err(Error::capability(format!(
                "hidden layer {j} has width p^{j} = {} but needs p^{j} >= m(n+1)^{} = {need}",
                dims[j],
                l - j + 1
            )));
        }
    }
    if is_block(params, s, side) {
        return Ok(BlockResult {
            params: params.clone(),
            steps: Vec::new(),
            s,
        });
    }

    let mut rec = Recorder {
        cur: params.clone(),
        steps: Vec::new(),
    };
    let mut rows: Vec<usize> = (0..m).collect();
    let mut k_above = m;
    for j in (1..=l).rev() {
        let k = k_above * (n + 1);
        rec.sparsify(arch, data, j, &rows)?;
        let window = side.window(dims[j], k);
        rec.relocate(j, &window)?;
        rows = window.collect();
        k_above = k;
    }
    debug_assert!(is_block(&rec.cur, s, side));
    Ok(BlockResult {
        params: rec.cur,
        steps: rec.steps,
        s,
    })
}

/// Block reparametrization for networks whose activations are all the
/// identity, reaching the smaller block size `m(n+1)` for any depth by
/// merging consecutive matrices.
///
/// Needs `p^1 ≥ m(n+1)` and `p^j ≥ m(n+2)` for `j ≥ 2`; the extra `m` units
/// host the merged rows before they are moved into place.
pub fn to_block_linear(
    arch: &Architecture,
    params: &NetworkParams,
    data: &Dataset,
    spec: &ConstraintSpec,
    side: BlockSide,
) -> Result<BlockResult> {
    if !arch.is_linear() {
        return Err(Error::capability(
            "layer merging needs identity activations in every hidden layer",
        ));
    }
    check_common(arch, params, data, spec)?;
    let (m, n, l) = (arch.output_dim(), data.n(), arch.depth());
    let s = m * (n + 1);
    let dims = arch.dims();
    for j in 1..=l {
        let need = if j == 1 { s } else { m * (n + 2) };
        if dims[j] < need {
            return Err(Error::capability(format!(
                "hidden layer {j} has width p^{j} = {} but layer merging needs p^{j} >= {need}",
                dims[j]
            )));
        }
    }
    if is_block(params, s, side) {
        return Ok(BlockResult {
            params: params.clone(),
            steps: Vec::new(),
            s,
        });
    }

    let mut rec = Recorder {
        cur: params.clone(),
        steps: Vec::new(),
    };
    let mut rows: Vec<usize> = (0..m).collect();
    for j in (2..=l).rev() {
        rec.sparsify(arch, data, j, &rows)?;
        let live = nonzero_columns(rec.cur.matrix(j));
        let dead_rows: Vec<usize> = (0..dims[j]).filter(|&i| !live[i]).collect();
        rec.clear_rows(j - 1, &dead_rows);

        // m dead slots, preferring the final window
        let window = side.window(dims[j], m);
        let mut slots: Vec<usize> = window.clone().filter(|&i| !live[i]).collect();
        slots.extend((0..dims[j]).filter(|&i| !live[i] && !window.contains(&i)));
        slots.truncate(m);
        if slots.len() < m {
            return Err(Error::ReductionFailure(format!(
                "layer {j}: no room for {m} merged units"
            )));
        }

        let outer = rec.cur.matrix(j).select(Axis(0), &rows);
        let rho: Vec<f64> = outer
            .axis_iter(Axis(0))
            .map(|r| r.iter().map(|v| v.abs()).sum())
            .collect();
        let merged = outer.dot(rec.cur.matrix(j - 1));
        rec.push(j - 1, StepKind::MergeRows, None, |mat| {
            for k in 0..m {
                if rho[k] > 0.0 {
                    mat.row_mut(slots[k])
                        .assign(&merged.row(k).mapv(|v| v / rho[k]));
                }
            }
        });
        rec.push(j, StepKind::RouteRows, None, |mat| {
            for k in 0..m {
                if rho[k] > 0.0 {
                    let mut row = mat.row_mut(rows[k]);
                    row.fill(0.0);
                    row[slots[k]] = rho[k];
                }
            }
        });
        let used: Vec<usize> = (0..m).filter(|&k| rho[k] > 0.0).map(|k| slots[k]).collect();
        let stale: Vec<usize> = (0..dims[j]).filter(|i| !used.contains(i)).collect();
        rec.clear_rows(j - 1, &stale);

        rec.relocate(j, &window)?;
        rows = window.collect();
    }
    rec.sparsify(arch, data, 1, &rows)?;
    rec.relocate(1, &side.window(dims[1], s))?;
    debug_assert!(is_block(&rec.cur, s, side));
    Ok(BlockResult {
        params: rec.cur,
        steps: rec.steps,
        s,
    })
}

/// Given an upper block `Θ` and a lower block `Γ`, returns
/// `Θ' = (Θ^l, Θ^{l-1}+Γ^{l-1}, …, Θ^0+Γ^0)` and
/// `Γ' = (Γ^l, Θ^{l-1}+Γ^{l-1}, …, Θ^0+Γ^0)`.
pub fn embed_sum_hidden(
    upper: &NetworkParams,
    lower: &NetworkParams,
    s: usize,
) -> Result<(NetworkParams, NetworkParams)> {
    if !upper.same_shape(lower) {
        return Err(Error::structural("block parameters have different shapes"));
    }
    let dims = upper.dims();
    let width = dims[1..dims.len() - 1].iter().copied().min().unwrap_or(0);
    if width < 2 * s {
        return Err(Error::capability(format!(
            "minimal width {width} is below 2s = {}; the blocks would overlap",
            2 * s
        )));
    }
    if !is_block(upper, s, BlockSide::Upper) {
        return Err(Error::precondition(format!(
            "first argument is not an {s}-upper block"
        )));
    }
    if !is_block(lower, s, BlockSide::Lower) {
        return Err(Error::precondition(format!(
            "second argument is not an {s}-lower block"
        )));
    }
    let l = upper.depth();
    let mut shared: Vec<Array2<f64>> = (0..l).map(|j| upper.matrix(j) + lower.matrix(j)).collect();
    let mut up = shared.clone();
    up.push(upper.outer().clone());
    shared.push(lower.outer().clone());
    Ok((NetworkParams::new(up)?, NetworkParams::new(shared)?))
}

/// `[Θ', Γ']_{c1,c2} = (c1 Θ^l + c2 Γ^l, shared hidden layers)`.
pub fn mix_block(
    upper: &NetworkParams,
    lower: &NetworkParams,
    c1: f64,
    c2: f64,
) -> Result<NetworkParams> {
    check_shared_hidden(upper, lower)?;
    let l = upper.depth();
    let mut mats = upper.matrices()[..l].to_vec();
    mats.push(upper.outer() * c1 + lower.outer() * c2);
    NetworkParams::new(mats)
}

pub(crate) fn check_shared_hidden(a: &NetworkParams, b: &NetworkParams) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::structural("parameters have different shapes"));
    }
    let l = a.depth();
    if a.matrices()[..l] != b.matrices()[..l] {
        return Err(Error::structural(
            "parameters do not share their hidden layers",
        ));
    }
    Ok(())
}

/// Zero-pads a narrow network into a wider architecture with the same input
/// and output dimensions; outputs and the constraint value are unchanged.
pub fn embed_narrow(narrow: &NetworkParams, wide: &Architecture) -> Result<NetworkParams> {
    let nd = narrow.dims();
    let wd = wide.dims();
    if nd.len() != wd.len() || nd[0] != wd[0] || nd[nd.len() - 1] != wd[wd.len() - 1] {
        return Err(Error::structural(format!(
            "cannot embed dims {nd:?} into {wd:?}"
        )));
    }
    if nd.iter().zip(wd).any(|(a, b)| a > b) {
        return Err(Error::structural(format!(
            "dims {nd:?} are wider than {wd:?}"
        )));
    }
    let mut out = NetworkParams::zeros(wide);
    for (j, m) in narrow.matrices().iter().enumerate() {
        let (r, c) = m.dim();
        out.matrix_mut(j).slice_mut(s![..r, ..c]).assign(m);
    }
    Ok(out)
}

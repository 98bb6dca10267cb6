//! Feedforward networks without bias terms.
//!
//! A network of depth `l` is a tuple of matrices `Θ^0, …, Θ^l` with
//! `Θ^j ∈ R^{p^{j+1} × p^j}`; its output on an input `x` is
//! `Θ^l f^l[Θ^{l-1} ⋯ f^1[Θ^0 x]]` where each `f^j` acts entrywise.
//! Matrices are stored in input-to-output order, so `matrices()[0]` is the
//! input layer and `matrices()[l]` the outer layer.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entrywise activation function of one hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActivationKind {
    Identity,
    Relu,
    /// `max{0,b} + min{0,c·b}` with slope `c ∈ (0,1)`.
    LeakyRelu {
        c: f64,
    },
    /// `c·b^k` with `c > 0`, `k ≥ 1`.
    Polynomial {
        c: f64,
        k: f64,
    },
    Sigmoid,
}

impl ActivationKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ActivationKind::LeakyRelu { c } if !(c > 0.0 && c < 1.0) => Err(Error::parameter(
                format!("leaky_relu slope must lie in (0,1), got {c}"),
            )),
            ActivationKind::Polynomial { c, k } if !(c > 0.0 && k >= 1.0 && k.is_finite()) => {
                Err(Error::parameter(format!(
                    "polynomial activation needs c > 0 and finite k >= 1, got c={c}, k={k}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Scalar evaluation.
    pub fn eval(&self, b: f64) -> Result<f64> {
        Ok(match *self {
            ActivationKind::Identity => b,
            ActivationKind::Relu => b.max(0.0),
            ActivationKind::LeakyRelu { c } => b.max(0.0) + (c * b).min(0.0),
            ActivationKind::Polynomial { c, k } => {
                if k.fract() == 0.0 && k <= i32::MAX as f64 {
                    c * b.powi(k as i32)
                } else if b < 0.0 {
                    return Err(Error::domain(format!(
                        "polynomial activation with fractional power {k} at negative input {b}"
                    )));
                } else {
                    c * b.powf(k)
                }
            }
            ActivationKind::Sigmoid => 1.0 / (1.0 + (-b).exp()),
        })
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, ActivationKind::Identity)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ActivationKind::Identity => "identity",
            ActivationKind::Relu => "relu",
            ActivationKind::LeakyRelu { .. } => "leaky_relu",
            ActivationKind::Polynomial { .. } => "polynomial",
            ActivationKind::Sigmoid => "sigmoid",
        }
    }
}

/// Layer dimensions `p^0, …, p^{l+1}` and the activations `f^1, …, f^l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawArchitecture", into = "RawArchitecture")]
pub struct Architecture {
    dims: Vec<usize>,
    activations: Vec<ActivationKind>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArchitecture {
    dims: Vec<usize>,
    activations: Vec<ActivationKind>,
}

impl TryFrom<RawArchitecture> for Architecture {
    type Error = Error;

    fn try_from(raw: RawArchitecture) -> Result<Self> {
        Architecture::new(raw.dims, raw.activations)
    }
}

impl From<Architecture> for RawArchitecture {
    fn from(arch: Architecture) -> Self {
        RawArchitecture {
            dims: arch.dims,
            activations: arch.activations,
        }
    }
}

impl Architecture {
    pub fn new(dims: Vec<usize>, activations: Vec<ActivationKind>) -> Result<Self> {
        if dims.len() < 3 {
            return Err(Error::structural(format!(
                "need at least input, one hidden and output dimension, got {dims:?}"
            )));
        }
        if dims.contains(&0) {
            return Err(Error::structural(format!(
                "all dims must be >= 1, got {dims:?}"
            )));
        }
        if activations.len() != dims.len() - 2 {
            return Err(Error::structural(format!(
                "{} dims require {} activations, got {}",
                dims.len(),
                dims.len() - 2,
                activations.len()
            )));
        }
        for act in &activations {
            act.validate()?;
        }
        Ok(Self { dims, activations })
    }

    /// Same activation in every hidden layer.
    pub fn uniform(dims: Vec<usize>, activation: ActivationKind) -> Result<Self> {
        let l = dims.len().saturating_sub(2);
        Self::new(dims, vec![activation; l])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn activations(&self) -> &[ActivationKind] {
        &self.activations
    }

    /// Activation `f^j` for hidden layer `j ∈ {1, …, l}`.
    pub fn activation(&self, j: usize) -> ActivationKind {
        self.activations[j - 1]
    }

    /// Number of hidden layers `l`.
    pub fn depth(&self) -> usize {
        self.activations.len()
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        self.dims[self.dims.len() - 1]
    }

    pub fn hidden_widths(&self) -> &[usize] {
        &self.dims[1..self.dims.len() - 1]
    }

    /// Minimal width `min{p^1, …, p^l}`.
    pub fn min_width(&self) -> usize {
        self.hidden_widths().iter().copied().min().unwrap_or(0)
    }

    pub fn is_linear(&self) -> bool {
        self.activations.iter().all(ActivationKind::is_identity)
    }

    /// Shape of `Θ^j`.
    pub fn matrix_shape(&self, j: usize) -> (usize, usize) {
        (self.dims[j + 1], self.dims[j])
    }

    /// Total number of scalar parameters.
    pub fn parameter_count(&self) -> usize {
        self.dims.windows(2).map(|w| w[0] * w[1]).sum()
    }

    /// Copy of this architecture with every hidden width replaced.
    pub fn with_hidden_width(&self, width: usize) -> Result<Self> {
        let mut dims = self.dims.clone();
        let last = dims.len() - 1;
        for p in &mut dims[1..last] {
            *p = width;
        }
        Self::new(dims, self.activations.clone())
    }
}

/// The parameter tuple `(Θ^0, …, Θ^l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    matrices: Vec<Array2<f64>>,
}

impl NetworkParams {
    /// Wraps matrices given in input-to-output order, checking that
    /// consecutive shapes chain and every entry is finite.
    pub fn new(matrices: Vec<Array2<f64>>) -> Result<Self> {
        if matrices.len() < 2 {
            return Err(Error::structural("a network needs at least two matrices"));
        }
        for (j, pair) in matrices.windows(2).enumerate() {
            if pair[1].ncols() != pair[0].nrows() {
                return Err(Error::structural(format!(
                    "Θ^{} has {} columns but Θ^{} has {} rows",
                    j + 1,
                    pair[1].ncols(),
                    j,
                    pair[0].nrows()
                )));
            }
        }
        for (j, m) in matrices.iter().enumerate() {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::structural(format!("Θ^{j} has non-finite entries")));
            }
            if m.is_empty() {
                return Err(Error::structural(format!("Θ^{j} is empty")));
            }
        }
        Ok(Self { matrices })
    }

    pub fn zeros(arch: &Architecture) -> Self {
        let matrices = (0..=arch.depth())
            .map(|j| Array2::zeros(arch.matrix_shape(j)))
            .collect();
        Self { matrices }
    }

    /// Independent `N(0, std²)` entries.
    pub fn random<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R, std: f64) -> Self {
        let matrices = (0..=arch.depth())
            .map(|j| random_matrix(arch.matrix_shape(j), rng, std))
            .collect();
        Self { matrices }
    }

    /// Errors unless the shapes are exactly the ones `arch` prescribes.
    pub fn check_shapes(&self, arch: &Architecture) -> Result<()> {
        if self.matrices.len() != arch.depth() + 1 {
            return Err(Error::structural(format!(
                "architecture of depth {} needs {} matrices, got {}",
                arch.depth(),
                arch.depth() + 1,
                self.matrices.len()
            )));
        }
        for (j, m) in self.matrices.iter().enumerate() {
            if m.dim() != arch.matrix_shape(j) {
                return Err(Error::structural(format!(
                    "Θ^{j} has shape {:?}, architecture requires {:?}",
                    m.dim(),
                    arch.matrix_shape(j)
                )));
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.matrices.len() - 1
    }

    /// Dimensions `p^0, …, p^{l+1}` implied by the matrix shapes.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.matrices[0].ncols()];
        dims.extend(self.matrices.iter().map(|m| m.nrows()));
        dims
    }

    pub fn matrices(&self) -> &[Array2<f64>] {
        &self.matrices
    }

    pub fn into_matrices(self) -> Vec<Array2<f64>> {
        self.matrices
    }

    /// `Θ^j`.
    pub fn matrix(&self, j: usize) -> &Array2<f64> {
        &self.matrices[j]
    }

    pub fn matrix_mut(&mut self, j: usize) -> &mut Array2<f64> {
        &mut self.matrices[j]
    }

    /// The outer matrix `Θ^l`.
    pub fn outer(&self) -> &Array2<f64> {
        &self.matrices[self.depth()]
    }

    pub fn same_shape(&self, other: &NetworkParams) -> bool {
        self.matrices.len() == other.matrices.len()
            && self
                .matrices
                .iter()
                .zip(&other.matrices)
                .all(|(a, b)| a.dim() == b.dim())
    }

    fn require_same_shape(&self, other: &NetworkParams) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::structural("parameter tuples have different shapes"))
        }
    }

    /// `(1-t)·self + t·other`, entrywise. Entries on which both tuples agree
    /// are copied unchanged so untouched coordinates stay bit-exact.
    pub fn lerp(&self, other: &NetworkParams, t: f64) -> Result<NetworkParams> {
        self.require_same_shape(other)?;
        let matrices = self
            .matrices
            .iter()
            .zip(&other.matrices)
            .map(|(a, b)| {
                let mut out = a.clone();
                Zip::from(&mut out).and(b).for_each(|x, &y| {
                    if *x != y {
                        *x = (1.0 - t) * *x + t * y;
                    }
                });
                out
            })
            .collect();
        Ok(NetworkParams { matrices })
    }

    pub fn max_abs_diff(&self, other: &NetworkParams) -> Result<f64> {
        self.require_same_shape(other)?;
        Ok(self
            .matrices
            .iter()
            .zip(&other.matrices)
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.matrices
            .iter()
            .flat_map(|m| m.iter())
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> NetworkParams {
        NetworkParams {
            matrices: self.matrices.iter().map(|m| m * factor).collect(),
        }
    }
}

pub(crate) fn random_matrix<R: Rng + ?Sized>(
    shape: (usize, usize),
    rng: &mut R,
    std: f64,
) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || {
        let z: f64 = StandardNormal.sample(rng);
        std * z
    })
}

/// Inputs `X ∈ R^{d×n}` and labels `Y ∈ R^{m×n}`, one sample per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array2<f64>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array2<f64>) -> Result<Self> {
        if x.ncols() != y.ncols() {
            return Err(Error::structural(format!(
                "X has {} samples but Y has {}",
                x.ncols(),
                y.ncols()
            )));
        }
        if x.ncols() == 0 {
            return Err(Error::structural(
                "dataset must contain at least one sample",
            ));
        }
        if x.nrows() == 0 || y.nrows() == 0 {
            return Err(Error::structural(
                "input and output dimensions must be >= 1",
            ));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::structural("dataset has non-finite entries"));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array2<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    pub fn input_dim(&self) -> usize {
        self.x.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.y.nrows()
    }

    /// Samples of `self` followed by those of `other`.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        let x = ndarray::concatenate(Axis(1), &[self.x.view(), other.x.view()])
            .map_err(|e| Error::structural(e.to_string()))?;
        let y = ndarray::concatenate(Axis(1), &[self.y.view(), other.y.view()])
            .map_err(|e| Error::structural(e.to_string()))?;
        Dataset::new(x, y)
    }

    pub fn check_against(&self, arch: &Architecture) -> Result<()> {
        if self.input_dim() != arch.input_dim() || self.output_dim() != arch.output_dim() {
            return Err(Error::structural(format!(
                "dataset is {}→{} but architecture is {}→{}",
                self.input_dim(),
                self.output_dim(),
                arch.input_dim(),
                arch.output_dim()
            )));
        }
        Ok(())
    }
}

/// A bijection of `{0, …, len-1}` stored as `p[j]` = source index of slot `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(map: Vec<usize>) -> Result<Self> {
        Permutation::new(map)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.0
    }
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &i in &map {
            if i >= map.len() || seen[i] {
                return Err(Error::structural(format!("{map:?} is not a permutation")));
            }
            seen[i] = true;
        }
        Ok(Self(map))
    }

    pub fn identity(len: usize) -> Self {
        Self((0..len).collect())
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        use rand::seq::SliceRandom;
        let mut map: Vec<usize> = (0..len).collect();
        map.shuffle(rng);
        Self(map)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(j, &i)| i == j)
    }

    /// Source index for slot `j`.
    pub fn apply(&self, j: usize) -> usize {
        self.0[j]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (j, &i) in self.0.iter().enumerate() {
            inv[i] = j;
        }
        Permutation(inv)
    }

    /// `(M_p)_{ij} = M_{i,p(j)}`.
    pub fn permute_columns(&self, m: &Array2<f64>) -> Array2<f64> {
        m.select(Axis(1), &self.0)
    }

    /// `(M^p)_{ji} = M_{p(j),i}`.
    pub fn permute_rows(&self, m: &Array2<f64>) -> Array2<f64> {
        m.select(Axis(0), &self.0)
    }
}

/// Applies `kind` to every entry of `m`.
pub fn apply_activation(kind: ActivationKind, m: &Array2<f64>) -> Result<Array2<f64>> {
    match kind {
        ActivationKind::Identity => Ok(m.clone()),
        ActivationKind::Relu => Ok(m.mapv(|b| b.max(0.0))),
        ActivationKind::Sigmoid => Ok(m.mapv(|b| 1.0 / (1.0 + (-b).exp()))),
        _ => {
            let mut out = m.clone();
            for v in out.iter_mut() {
                *v = kind.eval(*v)?;
            }
            Ok(out)
        }
    }
}

/// Network output `g_Θ[x]` for a single input.
pub fn forward(
    arch: &Architecture,
    params: &NetworkParams,
    x: ArrayView1<'_, f64>,
) -> Result<Array1<f64>> {
    let column = x.to_owned().insert_axis(Axis(1));
    let out = forward_batch(arch, params, column.view())?;
    Ok(out.column(0).to_owned())
}

/// Column-wise network outputs `g_Θ[X] ∈ R^{m×n}`.
pub fn forward_batch(
    arch: &Architecture,
    params: &NetworkParams,
    x: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    let l = arch.depth();
    let hidden = layer_input(arch, params, x, l)?;
    Ok(params.matrix(l).dot(&hidden))
}

/// The matrix that `Θ^j` multiplies: `X` for `j = 0`, otherwise
/// `f^j[Θ^{j-1} ⋯ f^1[Θ^0 X]]`.
pub fn layer_input(
    arch: &Architecture,
    params: &NetworkParams,
    x: ArrayView2<'_, f64>,
    j: usize,
) -> Result<Array2<f64>> {
    params.check_shapes(arch)?;
    if x.nrows() != arch.input_dim() {
        return Err(Error::structural(format!(
            "input has {} rows, architecture expects {}",
            x.nrows(),
            arch.input_dim()
        )));
    }
    if j > arch.depth() {
        return Err(Error::structural(format!(
            "layer {j} exceeds depth {}",
            arch.depth()
        )));
    }
    let mut h = x.to_owned();
    for layer in 1..=j {
        let pre = params.matrix(layer - 1).dot(&h);
        h = apply_activation(arch.activation(layer), &pre)?;
    }
    Ok(h)
}

/// Relabels hidden units: `(Γ^j)_{uv} = (Θ^j)_{p^{j+1}(u), p^j(v)}` with the
/// input and output orderings fixed. `perms[j-1]` permutes hidden layer `j`.
pub fn permute_hidden(params: &NetworkParams, perms: &[Permutation]) -> Result<NetworkParams> {
    let l = params.depth();
    if perms.len() != l {
        return Err(Error::structural(format!(
            "expected {l} hidden-layer permutations, got {}",
            perms.len()
        )));
    }
    let dims = params.dims();
    for (j, p) in perms.iter().enumerate() {
        if p.len() != dims[j + 1] {
            return Err(Error::structural(format!(
                "permutation for hidden layer {} has length {}, layer width is {}",
                j + 1,
                p.len(),
                dims[j + 1]
            )));
        }
    }
    let matrices = params
        .matrices()
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let rows_permuted = if j < l {
                perms[j].permute_rows(m)
            } else {
                m.clone()
            };
            if j > 0 {
                perms[j - 1].permute_columns(&rows_permuted)
            } else {
                rows_permuted
            }
        })
        .collect();
    NetworkParams::new(matrices)
}

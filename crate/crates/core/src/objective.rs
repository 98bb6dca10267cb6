//! Convex losses, the empirical risk and the norm-ball constraint.

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::netcore::{forward_batch, Architecture, Dataset, NetworkParams};

/// Pointwise loss `l(a, b)` between a prediction `a` and a label `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Squared,
    Absolute,
    /// Needs scalar outputs, labels in `{-1, 1}` and predictions in `(-1, 1)`.
    Logistic,
    /// Needs scalar outputs and labels in `{-1, 1}`.
    Hinge,
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Squared => "squared",
            LossKind::Absolute => "absolute",
            LossKind::Logistic => "logistic",
            LossKind::Hinge => "hinge",
        }
    }

    fn needs_signed_labels(&self) -> bool {
        matches!(self, LossKind::Logistic | LossKind::Hinge)
    }

    /// Checks the label matrix `Y` once, before any loss is evaluated.
    pub fn check_labels(&self, y: &Array2<f64>) -> Result<()> {
        if !self.needs_signed_labels() {
            return Ok(());
        }
        if y.nrows() != 1 {
            return Err(Error::domain(format!(
                "{} loss needs a single output, got m = {}",
                self.name(),
                y.nrows()
            )));
        }
        if let Some(bad) = y.iter().find(|&&b| b != 1.0 && b != -1.0) {
            return Err(Error::domain(format!(
                "{} loss needs labels in {{-1, 1}}, got {bad}",
                self.name()
            )));
        }
        Ok(())
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" => Ok(LossKind::Squared),
            "absolute" => Ok(LossKind::Absolute),
            "logistic" => Ok(LossKind::Logistic),
            "hinge" => Ok(LossKind::Hinge),
            other => Err(Error::Parse(format!("unknown loss '{other}'"))),
        }
    }
}

/// `l(a, b)` for one sample.
pub fn pointwise_loss(
    kind: LossKind,
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::structural(format!(
            "prediction has length {} but label has length {}",
            a.len(),
            b.len()
        )));
    }
    match kind {
        LossKind::Squared => Ok(a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()),
        LossKind::Absolute => Ok(a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum()),
        LossKind::Logistic | LossKind::Hinge => {
            if a.len() != 1 {
                return Err(Error::domain(format!(
                    "{} loss needs scalar predictions, got length {}",
                    kind.name(),
                    a.len()
                )));
            }
            let (a, b) = (a[0], b[0]);
            if b != 1.0 && b != -1.0 {
                return Err(Error::domain(format!(
                    "{} loss needs labels in {{-1, 1}}, got {b}",
                    kind.name()
                )));
            }
            if kind == LossKind::Hinge {
                return Ok((1.0 - a * b).max(0.0));
            }
            if !(a.abs() < 1.0) {
                return Err(Error::domain(format!(
                    "logistic loss needs predictions in (-1, 1), got {a}"
                )));
            }
            Ok(-(1.0 + b) * (1.0 + a).ln() - (1.0 - b) * (1.0 - a).ln())
        }
    }
}

/// Sum of pointwise losses between the columns of `pred` and `y`.
pub fn risk_of_outputs(kind: LossKind, pred: &Array2<f64>, y: &Array2<f64>) -> Result<f64> {
    if pred.dim() != y.dim() {
        return Err(Error::structural(format!(
            "outputs have shape {:?} but labels have shape {:?}",
            pred.dim(),
            y.dim()
        )));
    }
    let mut total = 0.0;
    for (a, b) in pred.axis_iter(Axis(1)).zip(y.axis_iter(Axis(1))) {
        total += pointwise_loss(kind, a, b)?;
    }
    Ok(total)
}

/// `L(g_Θ) = Σ_i l(g_Θ[x_i], y_i)`.
pub fn empirical_risk(
    arch: &Architecture,
    params: &NetworkParams,
    data: &Dataset,
    kind: LossKind,
) -> Result<f64> {
    data.check_against(arch)?;
    let pred = forward_batch(arch, params, data.x().view())?;
    risk_of_outputs(kind, &pred, data.y())
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 {
        Ok(())
    } else {
        Err(Error::parameter(format!("q must lie in (0, inf], got {q}")))
    }
}

/// `||v||_q` for a single vector, `q = ∞` giving the max-abs entry.
pub fn lq_norm<'a>(v: impl IntoIterator<Item = &'a f64>, q: f64) -> f64 {
    if q == f64::INFINITY {
        v.into_iter().fold(0.0, |acc, x| acc.max(x.abs()))
    } else if q == 1.0 {
        v.into_iter().map(|x| x.abs()).sum()
    } else {
        v.into_iter()
            .map(|x| x.abs().powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
    }
}

/// Largest row-wise `ℓq` (quasi-)norm of `m`.
pub fn rowwise_lq_norm(m: &Array2<f64>, q: f64) -> Result<f64> {
    check_q(q)?;
    Ok(rowwise_unchecked(m, q))
}

pub(crate) fn rowwise_unchecked(m: &Array2<f64>, q: f64) -> f64 {
    m.axis_iter(Axis(0))
        .map(|row| lq_norm(row.iter(), q))
        .fold(0.0, f64::max)
}

/// The constraint `r(Θ) = max{a_r max_{j≥1} ||Θ^j||_1, b_r ||Θ^0||_q}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSpec {
    a_r: f64,
    b_r: f64,
    q: f64,
}

impl ConstraintSpec {
    pub fn new(a_r: f64, b_r: f64, q: f64) -> Result<Self> {
        if !(a_r >= 0.0 && a_r.is_finite() && b_r >= 0.0 && b_r.is_finite()) {
            return Err(Error::parameter(format!(
                "a_r and b_r must be finite and nonnegative, got {a_r}, {b_r}"
            )));
        }
        check_q(q)?;
        Ok(Self { a_r, b_r, q })
    }

    pub fn unconstrained() -> Self {
        Self {
            a_r: 0.0,
            b_r: 0.0,
            q: 1.0,
        }
    }

    pub fn a_r(&self) -> f64 {
        self.a_r
    }

    pub fn b_r(&self) -> f64 {
        self.b_r
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn is_unconstrained(&self) -> bool {
        self.a_r == 0.0 && self.b_r == 0.0
    }
}

impl Default for ConstraintSpec {
    fn default() -> Self {
        Self::unconstrained()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraint {
    a_r: f64,
    b_r: f64,
    q: QValue,
}

/// `q` on the wire: a positive number or the string `"inf"`.
#[derive(Debug, Clone, Copy)]
struct QValue(f64);

impl Serialize for QValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for QValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(q) => Ok(QValue(q)),
            Repr::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "Infinity") => {
                Ok(QValue(f64::INFINITY))
            }
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "q must be a number or \"inf\", got \"{t}\""
            ))),
        }
    }
}

impl Serialize for ConstraintSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawConstraint {
            a_r: self.a_r,
            b_r: self.b_r,
            q: QValue(self.q),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConstraintSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawConstraint::deserialize(d)?;
        ConstraintSpec::new(raw.a_r, raw.b_r, raw.q.0).map_err(serde::de::Error::custom)
    }
}

/// `r(Θ)`; zero for the unconstrained spec.
pub fn constraint_value(params: &NetworkParams, spec: &ConstraintSpec) -> f64 {
    let mut value: f64 = 0.0;
    if spec.a_r > 0.0 {
        let hidden = params.matrices()[1..]
            .iter()
            .map(|m| rowwise_unchecked(m, 1.0))
            .fold(0.0, f64::max);
        value = value.max(spec.a_r * hidden);
    }
    if spec.b_r > 0.0 {
        value = value.max(spec.b_r * rowwise_unchecked(params.matrix(0), spec.q));
    }
    value
}

/// `r(Θ) ≤ 1 + tol`.
pub fn is_feasible(params: &NetworkParams, spec: &ConstraintSpec, tol: f64) -> bool {
    constraint_value(params, spec) <= 1.0 + tol
}

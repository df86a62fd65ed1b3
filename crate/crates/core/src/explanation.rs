//! Feature vectors, explanation families and single-threshold explanations.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{MesError, Result};

/// A point in feature space. All entries are finite and `D >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(MesError::EmptyVector);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(MesError::NonFinite { index });
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = MesError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(v: FeatureVector) -> Self {
        v.0
    }
}

/// Orientation of an axis-aligned family: `Le` projects `x_i`, `Ge` projects
/// `-x_i` so that `-x_i <= a` reads as `x_i >= -a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Le,
    Ge,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Le => 1.0,
            Direction::Ge => -1.0,
        }
    }

    pub fn from_sign(sign: i32) -> Result<Self> {
        match sign {
            1 => Ok(Direction::Le),
            -1 => Ok(Direction::Ge),
            other => Err(MesError::InvalidParameter(format!(
                "axis sign must be +1 or -1, got {other}"
            ))),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Direction::Le => "<=",
            Direction::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    AxisAligned { feature: usize, direction: Direction },
    Linear { weights: Vec<f64>, offset: f64 },
}

/// A scalar feature function `g`; its sub-level sets `{g <= a}` are the
/// candidate explanations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationFamily {
    pub kind: FamilyKind,
    pub name: String,
}

impl ExplanationFamily {
    pub fn axis(feature: usize, direction: Direction) -> Self {
        let name = format!("x[{feature}] {}", direction.symbol());
        Self {
            kind: FamilyKind::AxisAligned { feature, direction },
            name,
        }
    }

    pub fn linear(weights: Vec<f64>, offset: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(MesError::EmptyVector);
        }
        if weights.iter().chain([&offset]).any(|w| !w.is_finite()) {
            return Err(MesError::InvalidParameter(
                "linear family has non-finite coefficients".into(),
            ));
        }
        let name = format!("linear[{}]", weights.len());
        Ok(Self {
            kind: FamilyKind::Linear { weights, offset },
            name,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Both orientations of every coordinate, `2 * dim` families in total,
    /// ordered `x[0] <=, x[0] >=, x[1] <=, ...`.
    pub fn all_axis(dim: usize) -> Vec<Self> {
        (0..dim)
            .flat_map(|i| [Self::axis(i, Direction::Le), Self::axis(i, Direction::Ge)])
            .collect()
    }

    /// Dimension the family requires, when it pins one down.
    pub fn required_dim(&self) -> Option<usize> {
        match &self.kind {
            FamilyKind::AxisAligned { .. } => None,
            FamilyKind::Linear { weights, .. } => Some(weights.len()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match &self.kind {
            FamilyKind::AxisAligned { feature, direction } => {
                let v = x.get(*feature).ok_or(MesError::DimensionMismatch {
                    expected: feature + 1,
                    got: x.len(),
                })?;
                Ok(direction.sign() * v)
            }
            FamilyKind::Linear { weights, offset } => {
                if weights.len() != x.len() {
                    return Err(MesError::DimensionMismatch {
                        expected: weights.len(),
                        got: x.len(),
                    });
                }
                Ok(dot(weights, x) + offset)
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One rule `I{g(x) <= threshold}` with its score. A `+inf` threshold is the
/// null explanation `E0`, which is identically true and scores exactly 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub family_index: Option<usize>,
    pub family: Option<ExplanationFamily>,
    pub threshold: f64,
    pub score: f64,
}

impl Explanation {
    pub fn null() -> Self {
        Self {
            family_index: None,
            family: None,
            threshold: f64::INFINITY,
            score: 0.0,
        }
    }

    /// Builds a rule; an infinite threshold collapses to [`Explanation::null`].
    pub fn new(index: usize, family: ExplanationFamily, threshold: f64, score: f64) -> Self {
        if threshold == f64::INFINITY {
            return Self::null();
        }
        Self {
            family_index: Some(index),
            family: Some(family),
            threshold,
            score,
        }
    }

    pub fn is_null(&self) -> bool {
        self.threshold == f64::INFINITY
    }

    pub fn holds(&self, x: &[f64]) -> Result<bool> {
        match &self.family {
            None => Ok(true),
            Some(fam) => Ok(fam.eval(x)? <= self.threshold),
        }
    }
}

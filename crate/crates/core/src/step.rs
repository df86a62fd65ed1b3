//! Right-continuous piecewise-constant functions over sorted breakpoints.

use crate::error::{MesError, Result};

/// `eval(z) = values[k]` for `breakpoints[k] <= z < breakpoints[k + 1]`, and
/// `left_value` below the first breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    left_value: f64,
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>, left_value: f64) -> Result<Self> {
        if breakpoints.len() != values.len() {
            return Err(MesError::DimensionMismatch {
                expected: breakpoints.len(),
                got: values.len(),
            });
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(MesError::InvalidParameter("non-finite breakpoint".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MesError::InvalidParameter(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            values,
            left_value,
        })
    }

    /// Empirical CDF of `samples`. Duplicate samples merge into one breakpoint
    /// carrying their cumulative count.
    pub fn ecdf(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(MesError::InvalidParameter("ECDF of an empty sample".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(MesError::InvalidParameter("non-finite ECDF sample".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut breakpoints = Vec::new();
        let mut values = Vec::new();
        for (i, &s) in sorted.iter().enumerate() {
            if breakpoints.last() == Some(&s) {
                *values.last_mut().unwrap() = (i + 1) as f64 / n;
            } else {
                breakpoints.push(s);
                values.push((i + 1) as f64 / n);
            }
        }
        Ok(Self {
            breakpoints,
            values,
            left_value: 0.0,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn left_value(&self) -> f64 {
        self.left_value
    }

    pub fn len(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.breakpoints.is_empty()
    }

    /// Value beyond the last breakpoint.
    pub fn tail_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(self.left_value)
    }

    /// Number of breakpoints `<= z`.
    pub fn rank(&self, z: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= z)
    }

    pub fn eval(&self, z: f64) -> f64 {
        match self.rank(z) {
            0 => self.left_value,
            k => self.values[k - 1],
        }
    }

    /// Pointwise `self - other` on the union of both breakpoint sets.
    pub fn sub(&self, other: &StepFunction) -> StepFunction {
        let mut breakpoints = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.len() || j < other.len() {
            let next = match (self.breakpoints.get(i), other.breakpoints.get(j)) {
                (Some(&a), Some(&b)) if a < b => {
                    i += 1;
                    a
                }
                (Some(&a), Some(&b)) if b < a => {
                    j += 1;
                    b
                }
                (Some(&a), Some(_)) => {
                    i += 1;
                    j += 1;
                    a
                }
                (Some(&a), None) => {
                    i += 1;
                    a
                }
                (None, Some(&b)) => {
                    j += 1;
                    b
                }
                (None, None) => unreachable!(),
            };
            breakpoints.push(next);
        }
        let values = breakpoints.iter().map(|&b| self.eval(b) - other.eval(b)).collect();
        StepFunction {
            breakpoints,
            values,
            left_value: self.left_value - other.left_value,
        }
    }
}

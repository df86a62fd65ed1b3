//! Linear explanations viewed in an original feature space, and plot data
//! for score tables.
//!
//! With model-space input `C x` and rule `w . (C x) > a`, the template
//! `x_E = C^T w` lives in the original space and the rule reads
//! `x_E . x = sum(x_H) > a` where `x_H = x_E ∘ x`. Moving `x` against the
//! template, `x_F = x - alpha x_E / |x_E|^2`, lowers the left side by
//! exactly `alpha`.

use std::fmt::Write as _;

use crate::error::{MesError, Result};
use crate::explanation::dot;
use crate::precompute::ScoreTable;

/// Row-major matrix mapping original space (columns) to model space (rows).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl LinearMap {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || cols == 0 {
            return Err(MesError::EmptyVector);
        }
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(MesError::DimensionMismatch {
                expected: cols,
                got: r.len(),
            });
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(MesError::InvalidParameter("non-finite map entry".into()));
        }
        Ok(Self {
            rows: data.len() / cols,
            cols,
            data,
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self {
            rows: dim,
            cols: dim,
            data,
        }
    }

    pub fn model_dim(&self) -> usize {
        self.rows
    }

    pub fn original_dim(&self) -> usize {
        self.cols
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(MesError::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        Ok(self.data.chunks(self.cols).map(|r| dot(r, x)).collect())
    }

    pub fn apply_transpose(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.rows {
            return Err(MesError::DimensionMismatch {
                expected: self.rows,
                got: w.len(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (row, wi) in self.data.chunks(self.cols).zip(w) {
            for (o, c) in out.iter_mut().zip(row) {
                *o += wi * c;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    /// `(sum(x_H) - a) + margin`, margin `0.1 |sum(x_H) - a| + 1e-9`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub x_e: Vec<f64>,
    pub x_h: Vec<f64>,
    pub x_f: Vec<f64>,
    pub alpha: f64,
    pub sum_h: f64,
    pub threshold: f64,
}

impl Decomposition {
    /// Rule value at the original input: `sum(x_H) > a`.
    pub fn holds_at_input(&self) -> bool {
        self.sum_h > self.threshold
    }

    /// Rule value at the corrected input.
    pub fn holds_at_corrected(&self) -> bool {
        dot(&self.x_e, &self.x_f) > self.threshold
    }
}

pub fn decompose(x: &[f64], map: &LinearMap, w: &[f64], a: f64, alpha: Alpha) -> Result<Decomposition> {
    if x.len() != map.original_dim() {
        return Err(MesError::DimensionMismatch {
            expected: map.original_dim(),
            got: x.len(),
        });
    }
    let x_e = map.apply_transpose(w)?;
    let norm2: f64 = x_e.iter().map(|v| v * v).sum();
    if norm2 == 0.0 {
        return Err(MesError::DegenerateExplanation);
    }
    let x_h: Vec<f64> = x_e.iter().zip(x).map(|(e, v)| e * v).collect();
    let sum_h: f64 = x_h.iter().sum();
    let alpha = match alpha {
        Alpha::Fixed(v) => v,
        Alpha::Auto => {
            let gap = sum_h - a;
            gap + 0.1 * gap.abs() + 1e-9
        }
    };
    let x_f = x.iter().zip(&x_e).map(|(v, e)| v - alpha * e / norm2).collect();
    Ok(Decomposition {
        x_e,
        x_h,
        x_f,
        alpha,
        sum_h,
        threshold: a,
    })
}

pub const CURVE_HEADER: &str = "breakpoint,shat,cummax_score,cummax_arg";

/// CSV rows `(breakpoint, shat, cummax_score, cummax_arg)`; `+inf` prints as
/// `inf`. Values use shortest round-trip formatting.
pub fn emit_curve(t: &ScoreTable) -> String {
    let mut s = String::from(CURVE_HEADER);
    s.push('\n');
    for k in 0..t.num_breakpoints() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            t.shat.breakpoints()[k],
            t.shat.values()[k],
            t.cummax_score[k],
            t.cummax_arg[k]
        );
    }
    s
}

/// Columns of an emitted curve: breakpoints, shat, cummax_score, cummax_arg.
pub type CurveColumns = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);

pub fn parse_curve(csv: &str) -> Result<CurveColumns> {
    let mut lines = csv.lines();
    if lines.next() != Some(CURVE_HEADER) {
        return Err(MesError::Format("missing curve header".into()));
    }
    let mut cols: CurveColumns = Default::default();
    for line in lines.filter(|l| !l.is_empty()) {
        let v: Vec<f64> = line
            .split(',')
            .map(|t| t.parse().map_err(|_| MesError::Format(format!("bad value {t:?}"))))
            .collect::<Result<_>>()?;
        if v.len() != 4 {
            return Err(MesError::Format(format!("expected 4 columns, got {}", v.len())));
        }
        cols.0.push(v[0]);
        cols.1.push(v[1]);
        cols.2.push(v[2]);
        cols.3.push(v[3]);
    }
    Ok(cols)
}

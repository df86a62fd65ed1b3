//! Exact explanation score over a finite point set, by full enumeration.
//!
//! This is the reference the Monte Carlo engine is checked against; it never
//! touches ECDFs or cumulative tables.

use crate::blackbox::BlackBox;
use crate::error::{MesError, Result};
use crate::explanation::{Explanation, FeatureVector};

/// `P(E | f = 1) - P(E | f = 0)` with probabilities taken uniformly over `data`.
pub fn exact_score(e: &Explanation, f: &dyn BlackBox, data: &[FeatureVector]) -> Result<f64> {
    let labels = f.predict_batch(data)?;
    exact_score_labeled(e, data, &labels)
}

/// Same as [`exact_score`] with class labels supplied directly.
pub fn exact_score_labeled(e: &Explanation, data: &[FeatureVector], labels: &[bool]) -> Result<f64> {
    if data.len() != labels.len() {
        return Err(MesError::DimensionMismatch {
            expected: data.len(),
            got: labels.len(),
        });
    }
    let (mut n_pos, mut n_neg, mut hit_pos, mut hit_neg) = (0usize, 0usize, 0usize, 0usize);
    for (x, &label) in data.iter().zip(labels) {
        let hit = e.holds(x)?;
        if label {
            n_pos += 1;
            hit_pos += hit as usize;
        } else {
            n_neg += 1;
            hit_neg += hit as usize;
        }
    }
    if n_pos == 0 {
        return Err(MesError::DegenerateClassifier { missing: 1 });
    }
    if n_neg == 0 {
        return Err(MesError::DegenerateClassifier { missing: 0 });
    }
    Ok(hit_pos as f64 / n_pos as f64 - hit_neg as f64 / n_neg as f64)
}

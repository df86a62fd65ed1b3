//! Monte Carlo precomputation: class-conditional pools, per-family score
//! curves `S_hat = F_n - H_n`, and reverse-scan cumulative-argmax tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blackbox::BlackBox;
use crate::density::{class_pools, InputDensity, RejectionConfig};
use crate::error::{MesError, Result};
use crate::explanation::{ExplanationFamily, FeatureVector};
use crate::step::StepFunction;

/// Per-class sample count `ceil(8 ln(4M / delta) / epsilon^2)` that bounds
/// the score suboptimality of the returned explanation by `epsilon` with
/// probability `1 - delta`, uniformly over `M` families.
pub fn sample_size(epsilon: f64, delta: f64, num_families: usize) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(MesError::InvalidParameter(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(MesError::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if num_families == 0 {
        return Err(MesError::InvalidParameter("need at least one family".into()));
    }
    let n = (8.0 * (4.0 * num_families as f64 / delta).ln() / (epsilon * epsilon)).ceil();
    Ok(n as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBudget {
    pub epsilon: f64,
    pub delta: f64,
    pub num_families: usize,
    pub n: usize,
}

impl SampleBudget {
    pub fn new(epsilon: f64, delta: f64, num_families: usize) -> Result<Self> {
        Ok(Self {
            epsilon,
            delta,
            num_families,
            n: sample_size(epsilon, delta, num_families)?,
        })
    }
}

/// Which class plays the role of the explained one. `Negative` swaps the
/// pools, explaining `f(x) = 0` predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    #[default]
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    /// `None` for tables built by exhaustive enumeration.
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub n: usize,
    pub seed: u64,
    pub polarity: Polarity,
}

/// Precomputed score curve and cumulative-argmax table for one family.
///
/// `cummax_score[k]` is the maximum of `S_hat` over `[b_k, inf)`, counting
/// the tail value 0; `cummax_arg[k]` is the largest breakpoint attaining it,
/// or `+inf` when that maximum is not above 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub family: ExplanationFamily,
    pub shat: StepFunction,
    pub cummax_score: Vec<f64>,
    pub cummax_arg: Vec<f64>,
    pub meta: TableMeta,
}

impl ScoreTable {
    /// Builds the table from `g`-transformed pools: `explained` are the
    /// values on the explained class, `other` on the opposite class.
    pub fn from_values(family: ExplanationFamily, other: &[f64], explained: &[f64], meta: TableMeta) -> Result<Self> {
        let shat = StepFunction::ecdf(explained)?.sub(&StepFunction::ecdf(other)?);
        let (cummax_score, cummax_arg) = reverse_cummax(&shat);
        Ok(Self {
            family,
            shat,
            cummax_score,
            cummax_arg,
            meta,
        })
    }

    /// Reassembles a table from stored arrays, checking its invariants.
    pub fn from_parts(
        family: ExplanationFamily,
        shat: StepFunction,
        cummax_score: Vec<f64>,
        cummax_arg: Vec<f64>,
        meta: TableMeta,
    ) -> Result<Self> {
        let k = shat.len();
        if cummax_score.len() != k || cummax_arg.len() != k {
            return Err(MesError::Format("table arrays have unequal lengths".into()));
        }
        if cummax_score.windows(2).any(|w| w[0] < w[1]) {
            return Err(MesError::Format("cumulative max is not nonincreasing".into()));
        }
        if cummax_arg
            .iter()
            .zip(shat.breakpoints())
            .any(|(a, b)| a < b || a.is_nan())
        {
            return Err(MesError::Format("cumulative argmax below its breakpoint".into()));
        }
        Ok(Self {
            family,
            shat,
            cummax_score,
            cummax_arg,
            meta,
        })
    }

    /// Best `(threshold, score)` with `threshold >= z`. Candidates are `z`
    /// itself and the cumulative entry of the first breakpoint above `z`;
    /// ties go to the larger threshold. Returns `(+inf, 0)` when nothing
    /// scores above 0.
    pub fn query(&self, z: f64) -> (f64, f64) {
        let here = self.shat.eval(z);
        let j = self.shat.rank(z);
        let (mut threshold, mut score) = (z, here);
        if let (Some(&s), Some(&a)) = (self.cummax_score.get(j), self.cummax_arg.get(j)) {
            if s >= score {
                threshold = a;
                score = s;
            }
        }
        if score <= 0.0 || threshold == f64::INFINITY {
            (f64::INFINITY, 0.0)
        } else {
            (threshold, score)
        }
    }

    pub fn query_point(&self, x: &[f64]) -> Result<(f64, f64)> {
        Ok(self.query(self.family.eval(x)?))
    }

    pub fn num_breakpoints(&self) -> usize {
        self.shat.len()
    }
}

fn reverse_cummax(shat: &StepFunction) -> (Vec<f64>, Vec<f64>) {
    let k = shat.len();
    let mut score = vec![0.0; k];
    let mut arg = vec![f64::INFINITY; k];
    let (mut best, mut best_arg) = (0.0, f64::INFINITY);
    for i in (0..k).rev() {
        let v = shat.values()[i];
        // Strict: on ties the already-seen larger breakpoint wins.
        if v > best {
            best = v;
            best_arg = shat.breakpoints()[i];
        }
        score[i] = best;
        arg[i] = best_arg;
    }
    (score, arg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecomputeOptions {
    pub rejection: RejectionConfig,
    pub polarity: Polarity,
    /// Pool points re-queried to detect nondeterministic classifiers.
    pub spot_checks: usize,
}

impl Default for PrecomputeOptions {
    fn default() -> Self {
        Self {
            rejection: RejectionConfig::default(),
            polarity: Polarity::Positive,
            spot_checks: 8,
        }
    }
}

/// Draws one shared pair of class pools of `budget.n` points each and builds
/// a table per family.
pub fn build_tables(
    f: &dyn BlackBox,
    p: &InputDensity,
    families: &[ExplanationFamily],
    budget: &SampleBudget,
    opts: &PrecomputeOptions,
) -> Result<Vec<ScoreTable>> {
    if families.is_empty() {
        return Err(MesError::InvalidParameter("no explanation families".into()));
    }
    if budget.num_families != families.len() {
        return Err(MesError::InvalidParameter(format!(
            "budget sized for {} families, got {}",
            budget.num_families,
            families.len()
        )));
    }
    let (neg, pos) = class_pools(p, f, budget.n, &opts.rejection)?;
    log::info!(
        "class pools: n = {} per class, acceptance rate f=0: {:.4}, f=1: {:.4}",
        budget.n,
        neg.acceptance_rate(),
        pos.acceptance_rate()
    );
    spot_check(f, &neg.points, false, opts.spot_checks)?;
    spot_check(f, &pos.points, true, opts.spot_checks)?;
    let meta = TableMeta {
        epsilon: Some(budget.epsilon),
        delta: Some(budget.delta),
        n: budget.n,
        seed: p.seed,
        polarity: opts.polarity,
    };
    tables_from_pools(families, &neg.points, &pos.points, meta)
}

fn spot_check(f: &dyn BlackBox, pool: &[FeatureVector], label: bool, k: usize) -> Result<()> {
    let k = k.min(pool.len());
    if k == 0 {
        return Ok(());
    }
    if f.predict_batch(&pool[..k])?.iter().any(|&l| l != label) {
        return Err(MesError::Nondeterministic);
    }
    Ok(())
}

/// Tables from explicit class pools `(f = 0, f = 1)`; `meta.polarity`
/// decides which pool is the explained class.
pub fn tables_from_pools(
    families: &[ExplanationFamily],
    class0: &[FeatureVector],
    class1: &[FeatureVector],
    meta: TableMeta,
) -> Result<Vec<ScoreTable>> {
    if class0.is_empty() {
        return Err(MesError::DegenerateClassifier { missing: 0 });
    }
    if class1.is_empty() {
        return Err(MesError::DegenerateClassifier { missing: 1 });
    }
    let (other, explained) = match meta.polarity {
        Polarity::Positive => (class0, class1),
        Polarity::Negative => (class1, class0),
    };
    families
        .par_iter()
        .map(|fam| {
            let g_other = other.iter().map(|x| fam.eval(x)).collect::<Result<Vec<_>>>()?;
            let g_expl = explained.iter().map(|x| fam.eval(x)).collect::<Result<Vec<_>>>()?;
            ScoreTable::from_values(fam.clone(), &g_other, &g_expl, meta.clone())
        })
        .collect()
}

/// Exhaustive mode: every data point is used exactly once, in the pool of
/// its class. Scores then equal exact enumeration over `data`.
pub fn build_tables_exhaustive(
    f: &dyn BlackBox,
    data: &[FeatureVector],
    families: &[ExplanationFamily],
    polarity: Polarity,
) -> Result<Vec<ScoreTable>> {
    let labels = f.predict_batch(data)?;
    let (class1, class0): (Vec<_>, Vec<_>) = data.iter().cloned().zip(labels).partition(|(_, l)| *l);
    let class0: Vec<FeatureVector> = class0.into_iter().map(|(x, _)| x).collect();
    let class1: Vec<FeatureVector> = class1.into_iter().map(|(x, _)| x).collect();
    let meta = TableMeta {
        epsilon: None,
        delta: None,
        n: data.len(),
        seed: 0,
        polarity,
    };
    tables_from_pools(families, &class0, &class1, meta)
}

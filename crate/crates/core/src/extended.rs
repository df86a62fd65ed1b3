//! Learning linear explanation families with a convex surrogate loss.
//!
//! For an anchor point `x0`, training data come from the anchored mixture:
//! a point mass at `x0` labeled +1 with weight `1 - gamma`, and with weight
//! `gamma` the class-rebalanced input density, labels `y = 2 f(x) - 1`. A
//! linear decision `h(x) = v . x + c` is fit by minimizing the mean surrogate
//! loss `phi(y h(x))` plus `lambda |v|^2`. The learned rule is `h(x) >= 0`,
//! i.e. `(-v) . x <= c`.
//!
//! The coverage loop ([`extended_mes`]) repeats this for random uncovered
//! anchors until every input alert is covered by some learned rule.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::blackbox::BlackBox;
use crate::density::{conditional_sample_with, streams, InputDensity, RejectionConfig};
use crate::error::{MesError, Result};
use crate::explanation::{dot, ExplanationFamily, FeatureVector};
use crate::precompute::sample_size;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateLoss {
    /// `max(0, 1 - m)`; fit by subgradient descent.
    Hinge,
    /// `ln(1 + e^-m)`; fit by gradient descent.
    LogLogistic,
}

impl SurrogateLoss {
    pub fn value(self, m: f64) -> f64 {
        match self {
            SurrogateLoss::Hinge => (1.0 - m).max(0.0),
            SurrogateLoss::LogLogistic => {
                if m > 0.0 {
                    (-m).exp().ln_1p()
                } else {
                    -m + m.exp().ln_1p()
                }
            }
        }
    }

    /// Derivative (a subgradient for the hinge kink).
    pub fn derivative(self, m: f64) -> f64 {
        match self {
            SurrogateLoss::Hinge => {
                if m < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            SurrogateLoss::LogLogistic => -1.0 / (1.0 + m.exp()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Fixed(f64),
    /// Armijo backtracking; the objective never increases.
    Backtracking,
    /// `eta0 / sqrt(t + 1)`, the usual subgradient schedule.
    Diminishing(f64),
}

/// What the coverage loop removes after each fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeletionRule {
    /// Points where the learned rule holds.
    #[default]
    Coverage,
    /// Points where the rule's verdict equals the classifier's label.
    LabelAgreement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateConfig {
    pub loss: SurrogateLoss,
    /// Mixture weight of the rebalanced density, strictly inside (0, 0.5).
    pub gamma: f64,
    pub n_fit: usize,
    pub ridge: f64,
    pub max_iters: usize,
    /// `None` picks backtracking for log-logistic and a diminishing
    /// schedule for hinge.
    pub step: Option<StepRule>,
    /// Stop when the gradient norm falls below this.
    pub tol: f64,
    pub deletion: DeletionRule,
    pub rejection: RejectionConfig,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            loss: SurrogateLoss::LogLogistic,
            gamma: 0.25,
            n_fit: sample_size(0.025, 0.05, 1).expect("valid defaults"),
            ridge: 1e-6,
            max_iters: 500,
            step: None,
            tol: 1e-8,
            deletion: DeletionRule::Coverage,
            rejection: RejectionConfig::default(),
        }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 0.5) {
            return Err(MesError::InvalidParameter(format!(
                "gamma must lie in (0, 0.5), got {}",
                self.gamma
            )));
        }
        if self.n_fit < 4 {
            return Err(MesError::InvalidParameter("n_fit must be >= 4".into()));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(MesError::InvalidParameter("ridge must be >= 0".into()));
        }
        if self.max_iters == 0 {
            return Err(MesError::InvalidParameter("max_iters must be >= 1".into()));
        }
        Ok(())
    }

    fn step_rule(&self) -> StepRule {
        self.step.unwrap_or(match self.loss {
            SurrogateLoss::LogLogistic => StepRule::Backtracking,
            SurrogateLoss::Hinge => StepRule::Diminishing(1.0),
        })
    }
}

/// Labeled sample from the anchored mixture. The first `anchor_count`
/// points are copies of the anchor labeled +1.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchoredDataset {
    pub points: Vec<(FeatureVector, i8)>,
    pub anchor: FeatureVector,
    pub anchor_count: usize,
}

impl AnchoredDataset {
    pub fn new(points: Vec<(FeatureVector, i8)>, anchor: FeatureVector, anchor_count: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(MesError::InvalidParameter("empty anchored dataset".into()));
        }
        if anchor_count > points.len() || points[..anchor_count].iter().any(|(x, y)| *x != anchor || *y != 1) {
            return Err(MesError::InvalidParameter(
                "dataset must start with anchor_count +1 anchor copies".into(),
            ));
        }
        let dim = anchor.dim();
        for (x, y) in &points {
            if x.dim() != dim {
                return Err(MesError::DimensionMismatch {
                    expected: dim,
                    got: x.dim(),
                });
            }
            if *y != 1 && *y != -1 {
                return Err(MesError::InvalidParameter("labels must be +1 or -1".into()));
            }
        }
        Ok(Self {
            points,
            anchor,
            anchor_count,
        })
    }

    pub fn dim(&self) -> usize {
        self.anchor.dim()
    }
}

/// Anchor-copy count and `(positive, negative)` class draws for a budget of
/// `n` points. At least one draw per class is kept.
pub fn ppp_allocation(n: usize, gamma: f64) -> (usize, usize, usize) {
    let anchor = (((1.0 - gamma) * n as f64).round() as usize).min(n.saturating_sub(2));
    let rest = n - anchor;
    (anchor, rest.div_ceil(2), rest / 2)
}

/// Samples the anchored mixture with deterministic allocation. `iteration`
/// selects the RNG streams so repeated calls within one run are independent.
pub fn sample_ppp(
    anchor: &FeatureVector,
    f: &dyn BlackBox,
    p: &InputDensity,
    n: usize,
    gamma: f64,
    rejection: &RejectionConfig,
    iteration: u64,
) -> Result<AnchoredDataset> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(MesError::InvalidParameter(format!(
            "gamma must lie in (0, 0.5), got {gamma}"
        )));
    }
    if n < 4 {
        return Err(MesError::InvalidParameter("anchored sample needs n >= 4".into()));
    }
    if anchor.dim() != p.dim() {
        return Err(MesError::DimensionMismatch {
            expected: p.dim(),
            got: anchor.dim(),
        });
    }
    let (n_anchor, n_pos, n_neg) = ppp_allocation(n, gamma);
    let base = streams::FIT_BASE + 2 * iteration;
    let draw = |label: bool, count: usize, stream: u64| {
        conditional_sample_with(
            p,
            f,
            label,
            count,
            count.saturating_mul(rejection.max_draws_factor),
            rejection.batch_size,
            &mut p.rng(stream),
        )
    };
    let pos = draw(true, n_pos, base + 1)?;
    let neg = draw(false, n_neg, base)?;
    let mut points = Vec::with_capacity(n);
    points.extend(std::iter::repeat_n((anchor.clone(), 1i8), n_anchor));
    points.extend(pos.points.into_iter().map(|x| (x, 1i8)));
    points.extend(neg.points.into_iter().map(|x| (x, -1i8)));
    AnchoredDataset::new(points, anchor.clone(), n_anchor)
}

/// Surrogate objective on standardized, weight-compressed rows.
///
/// Parameters are `[v_1 .. v_D, c]` in standardized coordinates.
#[derive(Debug, Clone)]
pub struct SurrogateObjective {
    rows: Vec<Vec<f64>>,
    labels: Vec<f64>,
    weights: Vec<f64>,
    total_weight: f64,
    loss: SurrogateLoss,
    ridge: f64,
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl SurrogateObjective {
    pub fn new(ds: &AnchoredDataset, loss: SurrogateLoss, ridge: f64) -> Self {
        let dim = ds.dim();
        let others = &ds.points[ds.anchor_count..];
        let (mean, scale) = if others.is_empty() {
            (vec![0.0; dim], vec![1.0; dim])
        } else {
            let n = others.len() as f64;
            let mean: Vec<f64> = (0..dim)
                .map(|j| others.iter().map(|(x, _)| x[j]).sum::<f64>() / n)
                .collect();
            let scale = (0..dim)
                .map(|j| {
                    let var = others.iter().map(|(x, _)| (x[j] - mean[j]).powi(2)).sum::<f64>() / n;
                    if var > 0.0 && var.is_finite() {
                        var.sqrt()
                    } else {
                        1.0
                    }
                })
                .collect();
            (mean, scale)
        };
        let standardize = |x: &[f64]| -> Vec<f64> {
            x.iter()
                .zip(&mean)
                .zip(&scale)
                .map(|((v, m), s)| (v - m) / s)
                .chain([1.0])
                .collect()
        };
        let mut rows = Vec::with_capacity(others.len() + 1);
        let mut labels = Vec::with_capacity(others.len() + 1);
        let mut weights = Vec::with_capacity(others.len() + 1);
        if ds.anchor_count > 0 {
            rows.push(standardize(&ds.anchor));
            labels.push(1.0);
            weights.push(ds.anchor_count as f64);
        }
        for (x, y) in others {
            rows.push(standardize(x));
            labels.push(*y as f64);
            weights.push(1.0);
        }
        Self {
            rows,
            labels,
            weights,
            total_weight: ds.points.len() as f64,
            loss,
            ridge,
            mean,
            scale,
        }
    }

    pub fn num_params(&self) -> usize {
        self.mean.len() + 1
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let d = self.mean.len();
        let data: f64 = self
            .rows
            .iter()
            .zip(&self.labels)
            .zip(&self.weights)
            .map(|((r, y), w)| w * self.loss.value(y * dot(theta, r)))
            .sum();
        data / self.total_weight + self.ridge * theta[..d].iter().map(|v| v * v).sum::<f64>()
    }

    /// Gradient (log-logistic) or a subgradient (hinge).
    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.mean.len();
        let mut g = vec![0.0; d + 1];
        for ((r, y), w) in self.rows.iter().zip(&self.labels).zip(&self.weights) {
            let coef = w * self.loss.derivative(y * dot(theta, r)) * y;
            if coef != 0.0 {
                for (gj, rj) in g.iter_mut().zip(r) {
                    *gj += coef * rj;
                }
            }
        }
        for gj in g.iter_mut() {
            *gj /= self.total_weight;
        }
        for j in 0..d {
            g[j] += 2.0 * self.ridge * theta[j];
        }
        g
    }

    /// Maps standardized parameters to `(v, c)` in original coordinates.
    pub fn to_original(&self, theta: &[f64]) -> (Vec<f64>, f64) {
        let d = self.mean.len();
        let v: Vec<f64> = (0..d).map(|j| theta[j] / self.scale[j]).collect();
        let c = theta[d] - (0..d).map(|j| v[j] * self.mean[j]).sum::<f64>();
        (v, c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedTheta {
    /// `[v_1 .. v_D, c]` in original coordinates; decision `h(x) = v . x + c`.
    pub theta_tilde: Vec<f64>,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub iterations: usize,
    /// Intercept was raised after fitting to make `h(anchor) = 0`.
    pub shifted: bool,
    pub anchor_feasible: bool,
    pub loss_trace: Vec<f64>,
}

impl FittedTheta {
    pub fn decision(&self, x: &[f64]) -> f64 {
        let d = self.theta_tilde.len() - 1;
        dot(&self.theta_tilde[..d], x) + self.theta_tilde[d]
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Fits `theta` from zero, then raises the intercept if the anchor ended
/// up on the wrong side.
pub fn fit_surrogate(ds: &AnchoredDataset, cfg: &SurrogateConfig) -> Result<FittedTheta> {
    if cfg.max_iters == 0 {
        return Err(MesError::InvalidParameter("max_iters must be >= 1".into()));
    }
    let obj = SurrogateObjective::new(ds, cfg.loss, cfg.ridge);
    let mut theta = vec![0.0; obj.num_params()];
    let initial = obj.value(&theta);
    if !initial.is_finite() {
        return Err(MesError::NonFiniteLoss);
    }
    let mut current = initial;
    let mut best = (theta.clone(), initial);
    let mut trace = vec![initial];
    let mut step = 1.0;
    let mut iterations = 0;
    for t in 0..cfg.max_iters {
        let g = obj.gradient(&theta);
        let gnorm = norm(&g);
        if !gnorm.is_finite() {
            return Err(MesError::NonFiniteLoss);
        }
        if gnorm <= cfg.tol {
            break;
        }
        iterations = t + 1;
        match cfg.step_rule() {
            StepRule::Fixed(eta) => {
                for (th, gj) in theta.iter_mut().zip(&g) {
                    *th -= eta * gj;
                }
                current = obj.value(&theta);
            }
            StepRule::Diminishing(eta0) => {
                let eta = eta0 / ((t + 1) as f64).sqrt();
                for (th, gj) in theta.iter_mut().zip(&g) {
                    *th -= eta * gj;
                }
                current = obj.value(&theta);
            }
            StepRule::Backtracking => {
                step *= 2.0;
                let g2 = gnorm * gnorm;
                loop {
                    let trial: Vec<f64> = theta.iter().zip(&g).map(|(th, gj)| th - step * gj).collect();
                    let v = obj.value(&trial);
                    if v.is_finite() && v <= current - 0.5 * step * g2 {
                        theta = trial;
                        current = v;
                        break;
                    }
                    step *= 0.5;
                    if step < 1e-20 {
                        break;
                    }
                }
                if step < 1e-20 {
                    break;
                }
            }
        }
        if !current.is_finite() {
            return Err(MesError::NonFiniteLoss);
        }
        trace.push(current);
        if current < best.1 {
            best = (theta.clone(), current);
        }
    }
    // Subgradient steps are not monotone; keep the best iterate seen.
    let (theta, final_loss) = best;
    let (v, mut c) = obj.to_original(&theta);
    if v.iter().chain([&c]).any(|x| !x.is_finite()) {
        return Err(MesError::NonFiniteLoss);
    }
    let h = dot(&v, &ds.anchor) + c;
    let shifted = h < 0.0;
    if shifted {
        c -= h;
        while dot(&v, &ds.anchor) + c < 0.0 {
            c = c.next_up();
        }
    }
    let mut theta_tilde = v;
    theta_tilde.push(c);
    let mut fitted = FittedTheta {
        theta_tilde,
        initial_loss: initial,
        final_loss,
        iterations,
        shifted,
        anchor_feasible: false,
        loss_trace: trace,
    };
    fitted.anchor_feasible = fitted.decision(&ds.anchor) >= 0.0;
    Ok(fitted)
}

/// The rule `h(x) >= 0` as family `g(x) = w . x` with `w = -v` and
/// threshold `a = c`.
pub fn theta_to_family(t: &FittedTheta) -> Result<(ExplanationFamily, f64)> {
    let d = t
        .theta_tilde
        .len()
        .checked_sub(1)
        .filter(|d| *d > 0)
        .ok_or(MesError::EmptyVector)?;
    let v = &t.theta_tilde[..d];
    let c = t.theta_tilde[d];
    if v.iter().chain([&c]).any(|x| !x.is_finite()) {
        return Err(MesError::NonFiniteLoss);
    }
    if v.iter().all(|x| *x == 0.0) {
        return Err(MesError::DegenerateExplanation);
    }
    let w: Vec<f64> = v.iter().map(|x| -x).collect();
    Ok((ExplanationFamily::linear(w, 0.0)?, c))
}

/// One learned family, serialized as `{"w", "b", "threshold", "anchor_id",
/// "final_loss"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedFamily {
    pub w: Vec<f64>,
    pub b: f64,
    pub threshold: f64,
    pub anchor_id: usize,
    pub final_loss: f64,
}

impl FittedFamily {
    pub fn family(&self) -> Result<ExplanationFamily> {
        Ok(ExplanationFamily::linear(self.w.clone(), self.b)?.with_name(format!("linear#{}", self.anchor_id)))
    }

    pub fn holds(&self, x: &[f64]) -> Result<bool> {
        Ok(self.family()?.eval(x)? <= self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedOutput {
    pub families: Vec<FittedFamily>,
    /// Uncovered alerts before each iteration, then the final 0.
    pub coverage_log: Vec<usize>,
}

impl ExtendedOutput {
    pub fn explanation_families(&self) -> Result<Vec<ExplanationFamily>> {
        self.families.iter().map(FittedFamily::family).collect()
    }
}

/// Coverage loop over the alerts `xs`: fit a rule at a random uncovered
/// alert, drop every alert it covers, repeat until none remain.
pub fn extended_mes(
    xs: &[FeatureVector],
    f: &dyn BlackBox,
    p: &InputDensity,
    cfg: &SurrogateConfig,
) -> Result<ExtendedOutput> {
    cfg.validate()?;
    if xs.is_empty() {
        return Err(MesError::InvalidParameter("no anchor points".into()));
    }
    let labels = f.predict_batch(xs)?;
    if let Some(i) = labels.iter().position(|l| !l) {
        return Err(MesError::InvalidParameter(format!(
            "anchor {i} is not a positive prediction"
        )));
    }
    let cap = 10 * xs.len();
    let mut remaining: Vec<usize> = (0..xs.len()).collect();
    let mut rng = p.rng(streams::ANCHOR_PICK);
    let mut families = Vec::new();
    let mut coverage_log = Vec::new();
    let mut iteration = 0u64;
    while !remaining.is_empty() {
        if iteration as usize >= cap {
            return Err(MesError::IterationCap(cap));
        }
        coverage_log.push(remaining.len());
        log::info!("iteration {iteration}: {} alerts uncovered", remaining.len());
        let anchor_id = remaining[rng.random_range(0..remaining.len())];
        let anchor = &xs[anchor_id];
        let ds = sample_ppp(anchor, f, p, cfg.n_fit, cfg.gamma, &cfg.rejection, iteration)?;
        let fitted = fit_surrogate(&ds, cfg)?;
        let (family, threshold) = theta_to_family(&fitted)?;
        let mut keep = Vec::with_capacity(remaining.len());
        for &i in &remaining {
            let covered = family.eval(&xs[i])? <= threshold;
            let delete = match cfg.deletion {
                DeletionRule::Coverage => covered,
                DeletionRule::LabelAgreement => covered == labels[i],
            };
            if !delete {
                keep.push(i);
            }
        }
        debug_assert!(!keep.contains(&anchor_id));
        remaining = keep;
        let FamilyParts { w, b } = family_parts(&family);
        families.push(FittedFamily {
            w,
            b,
            threshold,
            anchor_id,
            final_loss: fitted.final_loss,
        });
        iteration += 1;
    }
    coverage_log.push(0);
    Ok(ExtendedOutput { families, coverage_log })
}

struct FamilyParts {
    w: Vec<f64>,
    b: f64,
}

fn family_parts(f: &ExplanationFamily) -> FamilyParts {
    match &f.kind {
        crate::explanation::FamilyKind::Linear { weights, offset } => FamilyParts {
            w: weights.clone(),
            b: *offset,
        },
        crate::explanation::FamilyKind::AxisAligned { .. } => unreachable!("fits are linear"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blackbox::FnModel;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn allocation_arithmetic() {
        assert_eq!(ppp_allocation(100, 0.25), (75, 13, 12));
        assert_eq!(ppp_allocation(100, 0.4999), (50, 25, 25));
        assert_eq!(ppp_allocation(4, 0.01), (2, 1, 1));
    }

    #[test]
    fn sample_ppp_counts_and_labels() {
        let p = InputDensity::standard_gaussian(2, 3).unwrap();
        let f = FnModel::new(|x: &[f64]| x[0] + x[1] > 0.0);
        let anchor = fv(&[1.0, 1.0]);
        let ds = sample_ppp(&anchor, &f, &p, 100, 0.25, &RejectionConfig::default(), 0).unwrap();
        assert_eq!(ds.points.len(), 100);
        assert_eq!(ds.anchor_count, 75);
        let pos = ds.points[75..].iter().filter(|(_, y)| *y == 1).count();
        assert_eq!(pos, 13);
        for (x, y) in &ds.points[75..] {
            assert_eq!(*y == 1, x[0] + x[1] > 0.0);
        }
        assert!(sample_ppp(&anchor, &f, &p, 100, 0.5, &RejectionConfig::default(), 0).is_err());
        assert!(sample_ppp(&anchor, &f, &p, 3, 0.25, &RejectionConfig::default(), 0).is_err());
    }

    #[test]
    fn hinge_separates_two_points() {
        let ds = AnchoredDataset::new(vec![(fv(&[-1.0]), -1), (fv(&[1.0]), 1)], fv(&[1.0]), 0).unwrap();
        let cfg = SurrogateConfig {
            loss: SurrogateLoss::Hinge,
            ..Default::default()
        };
        let t = fit_surrogate(&ds, &cfg).unwrap();
        assert!(t.decision(&[1.0]) > 0.0);
        assert!(t.decision(&[-1.0]) < 0.0);
        assert!(t.final_loss <= t.initial_loss);
    }

    #[test]
    fn all_positive_labels_keep_anchor_feasible() {
        let anchor = fv(&[0.5, -0.3]);
        let mut pts = vec![(anchor.clone(), 1i8); 3];
        pts.extend([fv(&[1.0, 2.0]), fv(&[-1.0, 0.0]), fv(&[0.0, 4.0])].map(|x| (x, 1i8)));
        let ds = AnchoredDataset::new(pts, anchor.clone(), 3).unwrap();
        let cfg = SurrogateConfig {
            loss: SurrogateLoss::Hinge,
            ..Default::default()
        };
        let t = fit_surrogate(&ds, &cfg).unwrap();
        assert!(t.anchor_feasible);
        assert!(t.decision(&anchor) >= 0.0);
    }

    #[test]
    fn fixed_step_log_logistic_is_monotone() {
        let p = InputDensity::standard_gaussian(3, 9).unwrap();
        let f = FnModel::new(|x: &[f64]| x[0] - 0.5 * x[2] > 0.2);
        let ds = sample_ppp(&fv(&[1.0, 0.0, 0.0]), &f, &p, 400, 0.3, &RejectionConfig::default(), 0).unwrap();
        let cfg = SurrogateConfig {
            step: Some(StepRule::Fixed(0.05)),
            max_iters: 200,
            ..Default::default()
        };
        let t = fit_surrogate(&ds, &cfg).unwrap();
        assert!(t.loss_trace.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(t.final_loss < t.initial_loss);
    }

    #[test]
    fn theta_conversion() {
        let t = |v: Vec<f64>| FittedTheta {
            theta_tilde: v,
            initial_loss: 0.0,
            final_loss: 0.0,
            iterations: 0,
            shifted: false,
            anchor_feasible: true,
            loss_trace: vec![],
        };
        let (fam, a) = theta_to_family(&t(vec![2.0, 0.0, 1.0])).unwrap();
        assert_eq!(a, 1.0);
        assert_eq!(fam.eval(&[3.0, 9.0]).unwrap(), -6.0);
        // -2 x1 <= 1  <=>  x1 >= -0.5
        assert!(fam.eval(&[-0.5, 0.0]).unwrap() <= a);
        assert!(fam.eval(&[-0.6, 0.0]).unwrap() > a);

        let (fam, a) = theta_to_family(&t(vec![0.0, -1.0, 0.5])).unwrap();
        assert!(fam.eval(&[9.0, 0.5]).unwrap() <= a);
        assert!(fam.eval(&[9.0, 0.51]).unwrap() > a);

        assert!(matches!(
            theta_to_family(&t(vec![0.0, 0.0, 1.0])),
            Err(MesError::DegenerateExplanation)
        ));
    }

    #[test]
    fn single_anchor_single_iteration() {
        let p = InputDensity::standard_gaussian(2, 21).unwrap();
        let f = FnModel::new(|x: &[f64]| x[1] <= 0.5);
        let xs = vec![fv(&[0.0, -1.0])];
        let cfg = SurrogateConfig {
            n_fit: 400,
            ..Default::default()
        };
        let out = extended_mes(&xs, &f, &p, &cfg).unwrap();
        assert_eq!(out.families.len(), 1);
        assert_eq!(out.coverage_log, vec![1, 0]);
        assert!(out.families[0].holds(&xs[0]).unwrap());
    }

    #[test]
    fn rejects_non_alert_anchors_and_bad_gamma() {
        let p = InputDensity::standard_gaussian(1, 0).unwrap();
        let f = FnModel::new(|x: &[f64]| x[0] <= 0.0);
        let cfg = SurrogateConfig {
            n_fit: 100,
            ..Default::default()
        };
        assert!(extended_mes(&[fv(&[1.0])], &f, &p, &cfg).is_err());
        let bad = SurrogateConfig { gamma: 0.6, ..cfg };
        assert!(extended_mes(&[fv(&[-1.0])], &f, &p, &bad).is_err());
    }
}

//! Per-point explanation selection, rendering and aggregation.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::blackbox::BlackBox;
use crate::density::InputDensity;
use crate::error::{MesError, Result};
use crate::explanation::{Direction, Explanation, ExplanationFamily, FamilyKind, FeatureVector};
use crate::precompute::{build_tables, Polarity, PrecomputeOptions, SampleBudget, ScoreTable};

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub family_index: usize,
    pub threshold: f64,
    pub score: f64,
}

/// Best rule over all tables subject to the rule holding at `x`.
///
/// Ties across families go to the lower index; within a family the table
/// already prefers the larger threshold. Falls back to the null rule when
/// no candidate scores above 0.
pub fn explain(x: &[f64], tables: &[ScoreTable]) -> Result<Explanation> {
    Ok(select(x, tables, false)?.0)
}

fn select(x: &[f64], tables: &[ScoreTable], keep: bool) -> Result<(Explanation, Vec<Candidate>)> {
    if tables.is_empty() {
        return Err(MesError::InvalidParameter("no score tables".into()));
    }
    let mut best: Option<Candidate> = None;
    let mut all = Vec::new();
    for (i, t) in tables.iter().enumerate() {
        let (threshold, score) = t.query_point(x)?;
        let c = Candidate {
            family_index: i,
            threshold,
            score,
        };
        if score > 0.0 && best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(c.clone());
        }
        if keep {
            all.push(c);
        }
    }
    let e = match best {
        Some(c) => Explanation::new(
            c.family_index,
            tables[c.family_index].family.clone(),
            c.threshold,
            c.score,
        ),
        None => Explanation::null(),
    };
    Ok((e, all))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationReport {
    pub input_id: String,
    pub input: FeatureVector,
    pub explanation: Explanation,
    pub rendered: String,
    pub candidates: Option<Vec<Candidate>>,
}

impl ExplanationReport {
    /// The JSON-lines record for this report.
    pub fn record(&self) -> ReportRecord {
        let e = &self.explanation;
        let (family, direction, threshold) = match (&e.family, e.is_null()) {
            (Some(fam), false) => {
                let (dir, a) = folded(fam, e.threshold);
                (Some(fam.name.clone()), Some(dir.symbol().to_owned()), Some(a))
            }
            _ => (None, None, None),
        };
        ReportRecord {
            input_id: self.input_id.clone(),
            family_index: e.family_index,
            family,
            direction,
            threshold,
            score: e.score,
            text: self.rendered.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub input_id: String,
    pub family_index: Option<usize>,
    pub family: Option<String>,
    pub direction: Option<String>,
    pub threshold: Option<f64>,
    pub score: f64,
    pub text: String,
}

/// Explains `x` and renders the result.
pub fn explain_report(
    input_id: impl Into<String>,
    x: &FeatureVector,
    tables: &[ScoreTable],
    renderer: &Renderer,
    with_candidates: bool,
) -> Result<ExplanationReport> {
    let (explanation, candidates) = select(x, tables, with_candidates)?;
    debug_assert!(explanation.holds(x)?);
    let rendered = renderer.render(&explanation);
    Ok(ExplanationReport {
        input_id: input_id.into(),
        input: x.clone(),
        explanation,
        rendered,
        candidates: with_candidates.then_some(candidates),
    })
}

/// Explains a negative prediction: tables are built with the class roles
/// swapped, so the chosen rule holds at `x` and tracks `f = 0`.
pub fn explain_negative(
    x: &FeatureVector,
    f: &dyn BlackBox,
    p: &InputDensity,
    families: &[ExplanationFamily],
    budget: &SampleBudget,
    opts: &PrecomputeOptions,
) -> Result<Explanation> {
    let opts = PrecomputeOptions {
        polarity: Polarity::Negative,
        ..*opts
    };
    let tables = build_tables(f, p, families, budget, &opts)?;
    explain(x, &tables)
}

/// Axis rules with a `Ge` family read as `x_i >= -a`; returns the displayed
/// direction and bound.
fn folded(fam: &ExplanationFamily, threshold: f64) -> (Direction, f64) {
    match fam.kind {
        FamilyKind::AxisAligned {
            direction: Direction::Ge,
            ..
        } => (Direction::Ge, -threshold),
        _ => (Direction::Le, threshold),
    }
}

/// Phrases for a one-hot encoded feature.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OneHotPhrase {
    pub present: Option<String>,
    pub absent: Option<String>,
}

/// Feature names plus optional one-hot metadata keyed by feature name.
#[derive(Debug, Clone, Default)]
pub struct Renderer {
    pub names: Vec<String>,
    pub one_hot: HashMap<String, OneHotPhrase>,
    /// Coefficients shown in linear summaries.
    pub top_terms: usize,
}

impl Renderer {
    pub fn new(names: Vec<String>) -> Self {
        Self {
            names,
            one_hot: HashMap::new(),
            top_terms: 3,
        }
    }

    pub fn with_one_hot(mut self, one_hot: HashMap<String, OneHotPhrase>) -> Self {
        self.one_hot = one_hot;
        self
    }

    fn name(&self, i: usize) -> String {
        self.names.get(i).cloned().unwrap_or_else(|| format!("x[{i}]"))
    }

    pub fn render(&self, e: &Explanation) -> String {
        render_text(e, &self.names, &self.one_hot, self.top_terms)
    }
}

/// Human-readable rule text.
pub fn render_text(
    e: &Explanation,
    names: &[String],
    one_hot: &HashMap<String, OneHotPhrase>,
    top_terms: usize,
) -> String {
    let r = Renderer {
        names: names.to_vec(),
        one_hot: HashMap::new(),
        top_terms,
    };
    let Some(fam) = e.family.as_ref().filter(|_| !e.is_null()) else {
        return "no explanation (null)".to_owned();
    };
    match &fam.kind {
        FamilyKind::AxisAligned { feature, .. } => {
            let name = r.name(*feature);
            let (dir, a) = folded(fam, e.threshold);
            if let Some(phrase) = one_hot.get(&name) {
                // Values are 0/1, so these bounds pin the indicator.
                let present = match dir {
                    Direction::Ge if a > 0.0 && a <= 1.0 => Some(true),
                    Direction::Le if (0.0..1.0).contains(&a) => Some(false),
                    _ => None,
                };
                match present {
                    Some(true) => return phrase.present.clone().unwrap_or_else(|| format!("{name} is present")),
                    Some(false) => {
                        return phrase
                            .absent
                            .clone()
                            .unwrap_or_else(|| format!("{name} is not present"))
                    }
                    None => {}
                }
            }
            let op = match dir {
                Direction::Le => "≤",
                Direction::Ge => "≥",
            };
            format!("{name} {op} {}", fmt_bound(a))
        }
        FamilyKind::Linear { weights, offset } => {
            let mut order: Vec<usize> = (0..weights.len()).collect();
            order.sort_by(|&i, &j| weights[j].abs().total_cmp(&weights[i].abs()).then(i.cmp(&j)));
            let shown: Vec<usize> = order
                .into_iter()
                .filter(|&i| weights[i] != 0.0)
                .take(top_terms.max(1))
                .collect();
            let mut s = String::new();
            for (k, &i) in shown.iter().enumerate() {
                let w = weights[i];
                if k == 0 {
                    s.push_str(&format!("{}·{}", fmt_coef(w), r.name(i)));
                } else {
                    let sign = if w < 0.0 { "−" } else { "+" };
                    s.push_str(&format!(" {sign} {}·{}", fmt_coef(w.abs()), r.name(i)));
                }
            }
            let hidden = weights.iter().filter(|w| **w != 0.0).count() - shown.len();
            if hidden > 0 {
                s.push_str(&format!(" + … ({hidden} more)"));
            }
            format!("{s} ≤ {}", fmt_bound(e.threshold - offset))
        }
    }
}

/// Up to four decimals, trailing zeros dropped.
fn fmt_bound(a: f64) -> String {
    let s = format!("{a:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_owned()
    } else {
        s.to_owned()
    }
}

fn fmt_coef(w: f64) -> String {
    format!("{:.3}", w)
}

/// Identity of an explanation for counting: family index and displayed
/// direction. `None` family is the null rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExplanationKey {
    pub family_index: Option<usize>,
    pub direction: Option<Direction>,
}

impl ExplanationKey {
    pub fn of(e: &Explanation) -> Self {
        match (&e.family, e.is_null()) {
            (Some(fam), false) => Self {
                family_index: e.family_index,
                direction: Some(folded(fam, e.threshold).0),
            },
            _ => Self {
                family_index: None,
                direction: None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupRow {
    /// Values of the grouping features.
    pub key: Vec<f64>,
    pub total: usize,
    /// Count per distinct explanation, most frequent first.
    pub counts: Vec<(ExplanationKey, usize)>,
    pub modal: ExplanationKey,
}

/// Group key bits mapped to the key values and per-explanation counts.
type Groups = HashMap<Vec<u64>, (Vec<f64>, BTreeMap<ExplanationKey, usize>)>;

/// Frequency of each distinct explanation per combination of the values of
/// `group_keys` features. Rows are sorted by key.
pub fn aggregate_explanations(reports: &[ExplanationReport], group_keys: &[usize]) -> Result<Vec<GroupRow>> {
    if reports.is_empty() {
        return Err(MesError::InvalidParameter("no reports to aggregate".into()));
    }
    let mut groups: Groups = HashMap::new();
    for r in reports {
        let key = group_keys
            .iter()
            .map(|&i| {
                r.input.get(i).copied().ok_or(MesError::DimensionMismatch {
                    expected: i + 1,
                    got: r.input.dim(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let bits = key.iter().map(|v| (v + 0.0).to_bits()).collect();
        let entry = groups.entry(bits).or_insert_with(|| (key, BTreeMap::new()));
        *entry.1.entry(ExplanationKey::of(&r.explanation)).or_default() += 1;
    }
    let mut rows: Vec<GroupRow> = groups
        .into_values()
        .map(|(key, counts)| {
            let mut counts: Vec<(ExplanationKey, usize)> = counts.into_iter().collect();
            counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            GroupRow {
                key,
                total: counts.iter().map(|c| c.1).sum(),
                modal: counts[0].0,
                counts,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.key
            .iter()
            .zip(&b.key)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(rows)
}

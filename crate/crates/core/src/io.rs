//! CSV and JSON readers/writers for points, matrices, names and families.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MesError, Result};
use crate::explain::OneHotPhrase;
use crate::explanation::{Direction, ExplanationFamily, FeatureVector};
use crate::extended::FittedFamily;

/// Numeric rows of a CSV. A first row that does not parse as numbers is
/// treated as a header.
pub fn read_matrix_csv_from<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(MesError::Format(format!("row {}: {e}", i + 1)));
            }
        }
    }
    Ok(rows)
}

pub fn read_matrix_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    read_matrix_csv_from(BufReader::new(File::open(path)?))
}

pub fn read_points_csv(path: &Path) -> Result<Vec<FeatureVector>> {
    let rows = read_matrix_csv(path)?;
    if rows.is_empty() {
        return Err(MesError::Format(format!("{} has no data rows", path.display())));
    }
    rows.into_iter().map(FeatureVector::new).collect()
}

/// Every number in the file, row by row; accepts a row or a column vector.
pub fn read_vector_csv(path: &Path) -> Result<Vec<f64>> {
    Ok(read_matrix_csv(path)?.into_iter().flatten().collect())
}

pub fn write_points_csv<W: Write>(out: W, points: &[FeatureVector]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.write_record(p.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_names(path: &Path) -> Result<Vec<String>> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// One-hot metadata: `{"feature name": {"present": "..", "absent": ".."}}`.
pub fn read_one_hot(path: &Path) -> Result<HashMap<String, OneHotPhrase>> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Family descriptors accepted in a families file: axis rules, plain linear
/// functions, or the output of the surrogate coverage loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilySpec {
    Fitted(FittedFamily),
    Axis {
        feature: usize,
        sign: i32,
        #[serde(default)]
        name: Option<String>,
    },
    Linear {
        w: Vec<f64>,
        #[serde(default)]
        b: f64,
        #[serde(default)]
        name: Option<String>,
    },
}

impl FamilySpec {
    pub fn to_family(&self) -> Result<ExplanationFamily> {
        match self {
            FamilySpec::Fitted(f) => f.family(),
            FamilySpec::Axis { feature, sign, name } => {
                let fam = ExplanationFamily::axis(*feature, Direction::from_sign(*sign)?);
                Ok(match name {
                    Some(n) => fam.with_name(n.clone()),
                    None => fam,
                })
            }
            FamilySpec::Linear { w, b, name } => {
                let fam = ExplanationFamily::linear(w.clone(), *b)?;
                Ok(match name {
                    Some(n) => fam.with_name(n.clone()),
                    None => fam,
                })
            }
        }
    }
}

pub fn read_families(path: &Path) -> Result<Vec<ExplanationFamily>> {
    let specs: Vec<FamilySpec> = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    if specs.is_empty() {
        return Err(MesError::Format("families file is empty".into()));
    }
    specs.iter().map(FamilySpec::to_family).collect()
}

pub fn write_fitted_families(path: &Path, families: &[FittedFamily]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, families)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Names axis families after the features they project.
pub fn name_axis_families(families: &mut [ExplanationFamily], names: &[String]) {
    for fam in families {
        if let crate::explanation::FamilyKind::AxisAligned { feature, direction } = fam.kind {
            if let Some(n) = names.get(feature) {
                fam.name = format!("{n} {}", direction.symbol());
            }
        }
    }
}

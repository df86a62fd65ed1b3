//! Versioned on-disk format for score tables.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic        8 bytes  "MESTABLE"
//! version      u32      1
//! header_len   u32
//! header       JSON     TablesHeader, header_len bytes of UTF-8
//! per family, in header order, with K = header.breakpoints[i]:
//!   left_value    f64
//!   breakpoints   K x f64
//!   shat          K x f64
//!   cummax_score  K x f64
//!   cummax_arg    K x f64   (+inf encodes the null rule)
//! ```
//!
//! Floats are stored as raw IEEE-754 bits, so load(save(t)) is bit-exact.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MesError, Result};
use crate::explanation::ExplanationFamily;
use crate::precompute::{Polarity, ScoreTable, TableMeta};
use crate::step::StepFunction;

pub const MAGIC: &[u8; 8] = b"MESTABLE";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablesHeader {
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub n: usize,
    pub seed: u64,
    pub dim: usize,
    pub num_families: usize,
    pub polarity: Polarity,
    pub families: Vec<ExplanationFamily>,
    pub breakpoints: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TablesFile {
    pub dim: usize,
    pub tables: Vec<ScoreTable>,
}

impl TablesFile {
    pub fn new(dim: usize, tables: Vec<ScoreTable>) -> Result<Self> {
        let first = tables
            .first()
            .ok_or_else(|| MesError::InvalidParameter("no tables to store".into()))?;
        if tables.iter().any(|t| t.meta != first.meta) {
            return Err(MesError::InvalidParameter("tables disagree on metadata".into()));
        }
        Ok(Self { dim, tables })
    }

    fn header(&self) -> TablesHeader {
        let meta = &self.tables[0].meta;
        TablesHeader {
            epsilon: meta.epsilon,
            delta: meta.delta,
            n: meta.n,
            seed: meta.seed,
            dim: self.dim,
            num_families: self.tables.len(),
            polarity: meta.polarity,
            families: self.tables.iter().map(|t| t.family.clone()).collect(),
            breakpoints: self.tables.iter().map(ScoreTable::num_breakpoints).collect(),
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::to_vec(&self.header())?;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        let len = u32::try_from(header.len()).map_err(|_| MesError::Format("header too large".into()))?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(&header)?;
        for t in &self.tables {
            w.write_all(&t.shat.left_value().to_le_bytes())?;
            for arr in [t.shat.breakpoints(), t.shat.values(), &t.cummax_score, &t.cummax_arg] {
                for v in arr {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(buf)
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| MesError::Format("truncated tables file".into()))?;
        if &magic != MAGIC {
            return Err(MesError::Format("not a tables file (bad magic)".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(MesError::Format(format!("unsupported tables version {version}")));
        }
        let len = read_u32(&mut r)? as usize;
        let mut header = vec![0u8; len];
        r.read_exact(&mut header)
            .map_err(|_| MesError::Format("truncated tables header".into()))?;
        let header: TablesHeader = serde_json::from_slice(&header)?;
        if header.families.len() != header.num_families || header.breakpoints.len() != header.num_families {
            return Err(MesError::Format("header family counts disagree".into()));
        }
        let meta = TableMeta {
            epsilon: header.epsilon,
            delta: header.delta,
            n: header.n,
            seed: header.seed,
            polarity: header.polarity,
        };
        let mut tables = Vec::with_capacity(header.num_families);
        for (family, &k) in header.families.into_iter().zip(&header.breakpoints) {
            let left = read_f64(&mut r)?;
            let breakpoints = read_f64s(&mut r, k)?;
            let values = read_f64s(&mut r, k)?;
            let cummax_score = read_f64s(&mut r, k)?;
            let cummax_arg = read_f64s(&mut r, k)?;
            let shat = StepFunction::new(breakpoints, values, left)?;
            tables.push(ScoreTable::from_parts(
                family,
                shat,
                cummax_score,
                cummax_arg,
                meta.clone(),
            )?);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(MesError::Format("trailing bytes after tables".into()));
        }
        if tables.is_empty() {
            return Err(MesError::Format("tables file holds no families".into()));
        }
        Ok(Self {
            dim: header.dim,
            tables,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    /// Debugging view; `null` in `cummax_arg` stands for `+inf`.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct TableJson<'a> {
            family: &'a ExplanationFamily,
            left_value: f64,
            breakpoints: &'a [f64],
            shat: &'a [f64],
            cummax_score: &'a [f64],
            cummax_arg: Vec<Option<f64>>,
        }
        #[derive(Serialize)]
        struct FileJson<'a> {
            version: u32,
            header: TablesHeader,
            tables: Vec<TableJson<'a>>,
        }
        let doc = FileJson {
            version: VERSION,
            header: self.header(),
            tables: self
                .tables
                .iter()
                .map(|t| TableJson {
                    family: &t.family,
                    left_value: t.shat.left_value(),
                    breakpoints: t.shat.breakpoints(),
                    shat: t.shat.values(),
                    cummax_score: &t.cummax_score,
                    cummax_arg: t.cummax_arg.iter().map(|a| a.is_finite().then_some(*a)).collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| MesError::Format("truncated tables file".into()))?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| MesError::Format("truncated tables body".into()))?;
    Ok(f64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, k: usize) -> Result<Vec<f64>> {
    (0..k).map(|_| read_f64(r)).collect()
}

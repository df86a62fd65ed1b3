//! `mes` command-line interface.
//!
//! Exit codes: 0 on success, 1 on runtime or domain errors, 2 on usage
//! errors (bad flags, out-of-range parameters, missing input files).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use crate::blackbox::{wrap_multiclass, BlackBox, ExternalProcess, LinearModel};
use crate::density::{InputDensity, RejectionConfig};
use crate::error::MesError;
use crate::explain::{explain_report, Renderer};
use crate::explanation::ExplanationFamily;
use crate::extended::{extended_mes, DeletionRule, SurrogateConfig, SurrogateLoss};
use crate::io;
use crate::precompute::{
    build_tables, build_tables_exhaustive, sample_size, Polarity, PrecomputeOptions, SampleBudget,
};
use crate::tables_file::TablesFile;
use crate::viz::{decompose, emit_curve, Alpha, LinearMap};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Mes(#[from] MesError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "mes",
    version,
    about = "Explain individual predictions of black-box binary classifiers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the per-class Monte Carlo sample count for (epsilon, delta, M).
    Samplesize(SamplesizeArgs),
    /// Draw class pools and write score tables for a set of families.
    Precompute(PrecomputeArgs),
    /// Explain each row of a points CSV using precomputed tables.
    Explain(ExplainArgs),
    /// Learn linear explanation families that cover a set of alerts.
    Extended(ExtendedArgs),
    /// Emit score-curve CSV for one table, or decompose a linear explanation
    /// in the original feature space.
    #[command(alias = "curves")]
    Viz(VizArgs),
    /// Serve a linear model over the stdin/stdout line protocol.
    Serve(ServeArgs),
}

fn parse_unit_open_closed(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1]"))
    }
}

fn parse_unit_open(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1)"))
    }
}

fn parse_gamma(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 0.5 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 0.5)"))
    }
}

#[derive(Debug, Args)]
pub struct SamplesizeArgs {
    #[arg(long, value_parser = parse_unit_open_closed)]
    pub epsilon: f64,
    #[arg(long, value_parser = parse_unit_open)]
    pub delta: f64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub num_families: u64,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("classifier").required(true).args(["model", "model_cmd"])))]
pub struct ModelArgs {
    /// Linear model JSON: {"weights": [..], "bias": ..}.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Command line of an external model process (line protocol).
    #[arg(long)]
    pub model_cmd: Option<String>,
    /// Treat the external model as multiclass and explain this class id.
    #[arg(long, requires = "model_cmd")]
    pub class: Option<u32>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// `gaussian:D` for a standard normal in D dimensions, or a CSV of
    /// points for the empirical distribution.
    #[arg(long)]
    pub density: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Points per classifier query.
    #[arg(long, default_value_t = crate::density::DEFAULT_BATCH)]
    pub batch_size: usize,
}

#[derive(Debug, Args)]
pub struct PrecomputeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub density: DensityArgs,
    /// `axis` for both orientations of every feature, or a families JSON file.
    #[arg(long, default_value = "axis")]
    pub families: String,
    #[arg(long, default_value_t = 0.025, value_parser = parse_unit_open_closed)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.05, value_parser = parse_unit_open)]
    pub delta: f64,
    /// Explain negative predictions instead of alerts.
    #[arg(long)]
    pub negative: bool,
    /// Use every point of an empirical density once instead of sampling.
    #[arg(long)]
    pub exhaustive: bool,
    /// Feature names JSON, used to name axis families.
    #[arg(long)]
    pub names: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a JSON rendering of the tables.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub tables: PathBuf,
    /// Points CSV, one row per query.
    #[arg(long)]
    pub input: PathBuf,
    /// Feature names JSON (list of strings).
    #[arg(long)]
    pub names: Option<PathBuf>,
    /// One-hot phrase metadata JSON keyed by feature name.
    #[arg(long)]
    pub one_hot: Option<PathBuf>,
    /// JSON-lines output; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LossArg {
    Hinge,
    Logistic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DeletionArg {
    Coverage,
    LabelAgreement,
}

#[derive(Debug, Args)]
pub struct ExtendedArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub density: DensityArgs,
    /// Alerts to cover, one row per point.
    #[arg(long)]
    pub anchors: PathBuf,
    #[arg(long, default_value_t = 0.25, value_parser = parse_gamma)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value_t = LossArg::Logistic)]
    pub loss: LossArg,
    /// Points per anchored fit; defaults to the sample size for
    /// (epsilon, delta, number of anchors).
    #[arg(long)]
    pub n_fit: Option<usize>,
    #[arg(long, default_value_t = 0.025, value_parser = parse_unit_open_closed)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.05, value_parser = parse_unit_open)]
    pub delta: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub ridge: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, value_enum, default_value_t = DeletionArg::Coverage)]
    pub deletion: DeletionArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["tables", "map"])))]
pub struct VizArgs {
    /// Curve mode: tables file.
    #[arg(long, requires = "family", conflicts_with_all = ["map", "weights", "input", "threshold"])]
    pub tables: Option<PathBuf>,
    /// Curve mode: family index.
    #[arg(long, requires = "tables")]
    pub family: Option<usize>,
    /// Decomposition mode: map CSV, rows = model dims, columns = original
    /// dims. Inputs are expected mean-removed.
    #[arg(long, requires_all = ["weights", "input", "threshold"])]
    pub map: Option<PathBuf>,
    #[arg(long, requires = "map")]
    pub weights: Option<PathBuf>,
    /// Original-space input vector CSV.
    #[arg(long, requires = "map")]
    pub input: Option<PathBuf>,
    /// Rule threshold `a` in `w . (C x) > a`.
    #[arg(long, requires = "map", allow_hyphen_values = true)]
    pub threshold: Option<f64>,
    /// `auto` or a number.
    #[arg(long, default_value = "auto", requires = "map", allow_hyphen_values = true)]
    pub alpha: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub model: PathBuf,
}

fn require_file(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} not found: {}", path.display())))
    }
}

fn load_model(args: &ModelArgs, dim: usize) -> CliResult<Box<dyn BlackBox>> {
    if let Some(path) = &args.model {
        require_file(path, "model file")?;
        let m = LinearModel::load(path)?;
        if m.weights.len() != dim {
            return Err(MesError::DimensionMismatch {
                expected: dim,
                got: m.weights.len(),
            }
            .into());
        }
        return Ok(Box::new(m));
    }
    let cmd = args.model_cmd.as_deref().expect("clap enforces one model source");
    let proc = ExternalProcess::spawn_command_line(cmd)?.with_dim(dim);
    Ok(match args.class {
        Some(k) => Box::new(wrap_multiclass(proc, k)?),
        None => Box::new(proc),
    })
}

fn load_density(args: &DensityArgs) -> CliResult<InputDensity> {
    if let Some(d) = args.density.strip_prefix("gaussian:") {
        let dim: usize = d
            .parse()
            .map_err(|_| CliError::Usage(format!("bad gaussian dimension {d:?}")))?;
        if dim == 0 {
            return Err(CliError::Usage("gaussian dimension must be >= 1".into()));
        }
        return Ok(InputDensity::standard_gaussian(dim, args.seed)?);
    }
    let path = Path::new(&args.density);
    require_file(path, "density file")?;
    Ok(InputDensity::from_csv(path, args.seed)?)
}

fn rejection(args: &DensityArgs) -> CliResult<RejectionConfig> {
    if args.batch_size == 0 {
        return Err(CliError::Usage("--batch-size must be >= 1".into()));
    }
    Ok(RejectionConfig {
        batch_size: args.batch_size,
        ..RejectionConfig::default()
    })
}

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

impl Cli {
    pub fn run(self) -> CliResult {
        match self.command {
            Command::Samplesize(a) => cmd_samplesize(a),
            Command::Precompute(a) => cmd_precompute(a),
            Command::Explain(a) => cmd_explain(a),
            Command::Extended(a) => cmd_extended(a),
            Command::Viz(a) => cmd_viz(a),
            Command::Serve(a) => cmd_serve(a),
        }
    }
}

fn cmd_samplesize(a: SamplesizeArgs) -> CliResult {
    let n = sample_size(a.epsilon, a.delta, a.num_families as usize)?;
    println!("{n}");
    Ok(())
}

fn cmd_precompute(a: PrecomputeArgs) -> CliResult {
    let density = load_density(&a.density)?;
    let dim = density.dim();
    let f = load_model(&a.model, dim)?;
    let mut families: Vec<ExplanationFamily> = if a.families == "axis" {
        ExplanationFamily::all_axis(dim)
    } else {
        let path = Path::new(&a.families);
        require_file(path, "families file")?;
        io::read_families(path)?
    };
    if let Some(names) = &a.names {
        require_file(names, "names file")?;
        io::name_axis_families(&mut families, &io::read_names(names)?);
    }
    for fam in &families {
        if let Some(d) = fam.required_dim().filter(|d| *d != dim) {
            return Err(MesError::DimensionMismatch { expected: dim, got: d }.into());
        }
        if let crate::explanation::FamilyKind::AxisAligned { feature, .. } = fam.kind {
            if feature >= dim {
                return Err(MesError::DimensionMismatch {
                    expected: dim,
                    got: feature + 1,
                }
                .into());
            }
        }
    }
    log::info!("M = {} families over D = {dim}", families.len());
    let polarity = if a.negative {
        Polarity::Negative
    } else {
        Polarity::Positive
    };
    let tables = if a.exhaustive {
        let crate::density::DensityKind::Empirical { points } = &density.kind else {
            return Err(CliError::Usage("--exhaustive needs an empirical density".into()));
        };
        build_tables_exhaustive(f.as_ref(), points, &families, polarity)?
    } else {
        let budget = SampleBudget::new(a.epsilon, a.delta, families.len())?;
        log::info!("n = {} samples per class", budget.n);
        let opts = PrecomputeOptions {
            rejection: rejection(&a.density)?,
            polarity,
            ..PrecomputeOptions::default()
        };
        build_tables(f.as_ref(), &density, &families, &budget, &opts)?
    };
    let file = TablesFile::new(dim, tables)?;
    file.save(&a.out)?;
    if let Some(json) = &a.json {
        std::fs::write(json, file.to_json()?)?;
    }
    log::info!("wrote {}", a.out.display());
    Ok(())
}

fn cmd_explain(a: ExplainArgs) -> CliResult {
    require_file(&a.tables, "tables file")?;
    require_file(&a.input, "input file")?;
    let file = TablesFile::load(&a.tables)?;
    let points = io::read_points_csv(&a.input)?;
    if let Some(bad) = points.iter().find(|p| p.dim() != file.dim) {
        return Err(MesError::DimensionMismatch {
            expected: file.dim,
            got: bad.dim(),
        }
        .into());
    }
    let names = match &a.names {
        Some(p) => {
            require_file(p, "names file")?;
            io::read_names(p)?
        }
        None => Vec::new(),
    };
    let mut renderer = Renderer::new(names);
    if let Some(p) = &a.one_hot {
        require_file(p, "one-hot file")?;
        renderer = renderer.with_one_hot(io::read_one_hot(p)?);
    }
    let mut out = output(a.out.as_deref())?;
    for (i, x) in points.iter().enumerate() {
        let report = explain_report(i.to_string(), x, &file.tables, &renderer, false)?;
        if !report.explanation.holds(x)? {
            return Err(MesError::InvalidParameter(format!(
                "internal error: explanation for row {i} is false at the query point"
            ))
            .into());
        }
        serde_json::to_writer(&mut out, &report.record()).map_err(MesError::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_extended(a: ExtendedArgs) -> CliResult {
    let density = load_density(&a.density)?;
    let f = load_model(&a.model, density.dim())?;
    require_file(&a.anchors, "anchors file")?;
    let anchors = io::read_points_csv(&a.anchors)?;
    let n_fit = match a.n_fit {
        Some(n) => n,
        None => sample_size(a.epsilon, a.delta, anchors.len())?,
    };
    let cfg = SurrogateConfig {
        loss: match a.loss {
            LossArg::Hinge => SurrogateLoss::Hinge,
            LossArg::Logistic => SurrogateLoss::LogLogistic,
        },
        gamma: a.gamma,
        n_fit,
        ridge: a.ridge,
        max_iters: a.max_iters,
        deletion: match a.deletion {
            DeletionArg::Coverage => DeletionRule::Coverage,
            DeletionArg::LabelAgreement => DeletionRule::LabelAgreement,
        },
        rejection: rejection(&a.density)?,
        ..SurrogateConfig::default()
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let out = extended_mes(&anchors, f.as_ref(), &density, &cfg)?;
    log::info!(
        "coverage: {} over {} iterations",
        out.coverage_log
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(" -> "),
        out.families.len()
    );
    io::write_fitted_families(&a.out, &out.families)?;
    Ok(())
}

fn cmd_viz(a: VizArgs) -> CliResult {
    let mut out = output(a.out.as_deref())?;
    if let Some(tables) = &a.tables {
        require_file(tables, "tables file")?;
        let file = TablesFile::load(tables)?;
        let i = a.family.expect("clap enforces --family");
        let t = file
            .tables
            .get(i)
            .ok_or_else(|| CliError::Usage(format!("family {i} out of range ({} tables)", file.tables.len())))?;
        out.write_all(emit_curve(t).as_bytes())?;
        out.flush()?;
        return Ok(());
    }
    let (map, weights, input) = (
        a.map.as_deref().expect("mode group"),
        a.weights.as_deref().expect("requires"),
        a.input.as_deref().expect("requires"),
    );
    for (p, what) in [(map, "map file"), (weights, "weights file"), (input, "input file")] {
        require_file(p, what)?;
    }
    let alpha = match a.alpha.as_str() {
        "auto" => Alpha::Auto,
        v => Alpha::Fixed(
            v.parse()
                .map_err(|_| CliError::Usage(format!("--alpha must be `auto` or a number, got {v:?}")))?,
        ),
    };
    let c = LinearMap::new(io::read_matrix_csv(map)?)?;
    let w = io::read_vector_csv(weights)?;
    let x = io::read_vector_csv(input)?;
    let d = decompose(&x, &c, &w, a.threshold.expect("requires"), alpha)?;
    writeln!(out, "index,x,x_e,x_h,x_f")?;
    for (i, (((xi, e), h), f)) in x.iter().zip(&d.x_e).zip(&d.x_h).zip(&d.x_f).enumerate() {
        writeln!(out, "{i},{xi},{e},{h},{f}")?;
    }
    out.flush()?;
    log::info!(
        "sum(x_H) = {}, a = {}, alpha = {}, E(x) = {}, E(x_F) = {}",
        d.sum_h,
        d.threshold,
        d.alpha,
        d.holds_at_input() as u8,
        d.holds_at_corrected() as u8
    );
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> CliResult {
    require_file(&a.model, "model file")?;
    let m = LinearModel::load(&a.model)?;
    let stdin = std::io::stdin().lock();
    let stdout = std::io::stdout().lock();
    crate::blackbox::serve(&m, stdin, stdout)?;
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.run() {
        Ok(()) => 0,
        // A closed downstream pipe (`mes curves ... | head`) is not a failure.
        Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(CliError::Mes(MesError::Io(e))) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

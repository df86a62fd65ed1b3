//! Queryable binary classifiers `f: R^D -> {0, 1}`.
//!
//! Labels are `bool`, `true` meaning class 1. Every implementation must be a
//! pure function of its input for the lifetime of the handle.
//!
//! External classifiers run as child processes speaking a line protocol on
//! stdin/stdout: each request line is the feature vector as comma-separated
//! decimals, each reply line is `0` or `1` (or a class id, for multiclass
//! models). A batch is written in full before its replies are read.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{MesError, Result};
use crate::explanation::{dot, ExplanationFamily, FeatureVector};

pub trait BlackBox: Send + Sync {
    fn predict(&self, x: &[f64]) -> Result<bool>;

    fn predict_batch(&self, xs: &[FeatureVector]) -> Result<Vec<bool>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    /// Input dimension, if the model knows it.
    fn dim(&self) -> Option<usize> {
        None
    }

    /// Whether concurrent callers may query without serializing.
    fn is_thread_safe(&self) -> bool {
        true
    }
}

impl<T: BlackBox + ?Sized> BlackBox for Box<T> {
    fn predict(&self, x: &[f64]) -> Result<bool> {
        (**self).predict(x)
    }
    fn predict_batch(&self, xs: &[FeatureVector]) -> Result<Vec<bool>> {
        (**self).predict_batch(xs)
    }
    fn dim(&self) -> Option<usize> {
        (**self).dim()
    }
    fn is_thread_safe(&self) -> bool {
        (**self).is_thread_safe()
    }
}

fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(MesError::DimensionMismatch { expected, got: x.len() });
    }
    Ok(())
}

/// Label 1 iff `weights . x + bias >= 0`. Also the on-disk model format:
/// `{"weights": [..], "bias": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>, bias: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(MesError::EmptyVector);
        }
        if weights.iter().chain([&bias]).any(|w| !w.is_finite()) {
            return Err(MesError::InvalidParameter(
                "linear model has non-finite coefficients".into(),
            ));
        }
        Ok(Self { weights, bias })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let model: LinearModel = serde_json::from_reader(BufReader::new(std::fs::File::open(path)?))?;
        Self::new(model.weights, model.bias)
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.weights.len(), x)?;
        Ok(dot(&self.weights, x) + self.bias)
    }
}

impl BlackBox for LinearModel {
    fn predict(&self, x: &[f64]) -> Result<bool> {
        Ok(self.decision(x)? >= 0.0)
    }

    fn dim(&self) -> Option<usize> {
        Some(self.weights.len())
    }
}

/// A classifier that is itself a threshold rule `I{g(x) <= threshold}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleModel {
    pub family: ExplanationFamily,
    pub threshold: f64,
}

impl RuleModel {
    pub fn new(family: ExplanationFamily, threshold: f64) -> Self {
        Self { family, threshold }
    }
}

impl BlackBox for RuleModel {
    fn predict(&self, x: &[f64]) -> Result<bool> {
        Ok(self.family.eval(x)? <= self.threshold)
    }

    fn dim(&self) -> Option<usize> {
        self.family.required_dim()
    }
}

/// Adapts any pure closure into a [`BlackBox`].
pub struct FnModel<F> {
    func: F,
    dim: Option<usize>,
}

impl<F: Fn(&[f64]) -> bool + Send + Sync> FnModel<F> {
    pub fn new(func: F) -> Self {
        Self { func, dim: None }
    }

    pub fn with_dim(func: F, dim: usize) -> Self {
        Self { func, dim: Some(dim) }
    }
}

impl<F: Fn(&[f64]) -> bool + Send + Sync> BlackBox for FnModel<F> {
    fn predict(&self, x: &[f64]) -> Result<bool> {
        if let Some(d) = self.dim {
            check_dim(d, x)?;
        }
        Ok((self.func)(x))
    }

    fn dim(&self) -> Option<usize> {
        self.dim
    }
}

/// A classifier over `num_classes` labels.
pub trait MulticlassModel: Send + Sync {
    fn predict_class(&self, x: &[f64]) -> Result<u32>;

    fn predict_classes(&self, xs: &[FeatureVector]) -> Result<Vec<u32>> {
        xs.iter().map(|x| self.predict_class(x)).collect()
    }

    fn num_classes(&self) -> Option<u32> {
        None
    }

    fn is_thread_safe(&self) -> bool {
        true
    }
}

/// Binary view `f(x) = I{model(x) = class}` of a multiclass model.
pub struct MulticlassWrapper<M> {
    model: M,
    class: u32,
}

pub fn wrap_multiclass<M: MulticlassModel>(model: M, class: u32) -> Result<MulticlassWrapper<M>> {
    if let Some(n) = model.num_classes() {
        if class >= n {
            return Err(MesError::InvalidParameter(format!(
                "class {class} out of range for a {n}-class model"
            )));
        }
    }
    Ok(MulticlassWrapper { model, class })
}

impl<M: MulticlassModel> MulticlassWrapper<M> {
    pub fn class(&self) -> u32 {
        self.class
    }

    pub fn inner(&self) -> &M {
        &self.model
    }
}

impl<M: MulticlassModel> BlackBox for MulticlassWrapper<M> {
    fn predict(&self, x: &[f64]) -> Result<bool> {
        Ok(self.model.predict_class(x)? == self.class)
    }

    fn predict_batch(&self, xs: &[FeatureVector]) -> Result<Vec<bool>> {
        Ok(self
            .model
            .predict_classes(xs)?
            .into_iter()
            .map(|c| c == self.class)
            .collect())
    }

    fn is_thread_safe(&self) -> bool {
        self.model.is_thread_safe()
    }
}

struct Pipe {
    child: Child,
    stdin: BufWriter<ChildStdin>,
    stdout: BufReader<ChildStdout>,
}

/// A classifier hosted in a child process. Single-owner: queries through
/// one handle are serialized.
pub struct ExternalProcess {
    pipe: Mutex<Pipe>,
    dim: Option<usize>,
}

impl ExternalProcess {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| MesError::Transport(format!("failed to spawn {program}: {e}")))?;
        let stdin = BufWriter::new(child.stdin.take().expect("piped stdin"));
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            pipe: Mutex::new(Pipe { child, stdin, stdout }),
            dim: None,
        })
    }

    /// Parses a shell-like command line on whitespace (no quoting).
    pub fn spawn_command_line(command: &str) -> Result<Self> {
        let mut parts = command.split_whitespace().map(str::to_owned);
        let program = parts
            .next()
            .ok_or_else(|| MesError::InvalidParameter("empty model command".into()))?;
        Self::spawn(&program, &parts.collect::<Vec<_>>())
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = Some(dim);
        self
    }

    fn exchange(&self, xs: &[&[f64]]) -> Result<Vec<String>> {
        if let Some(d) = self.dim {
            for x in xs {
                check_dim(d, x)?;
            }
        }
        let mut guard = self
            .pipe
            .lock()
            .map_err(|_| MesError::Transport("model process handle poisoned".into()))?;
        let pipe = &mut *guard;
        let transport = |e: std::io::Error| MesError::Transport(e.to_string());
        for x in xs {
            pipe.stdin.write_all(encode_request(x).as_bytes()).map_err(transport)?;
        }
        pipe.stdin.flush().map_err(transport)?;
        let mut replies = Vec::with_capacity(xs.len());
        let mut line = String::new();
        for _ in xs {
            line.clear();
            let read = pipe.stdout.read_line(&mut line).map_err(transport)?;
            if read == 0 {
                return Err(MesError::Transport("model process closed its output".into()));
            }
            replies.push(line.trim_end_matches(['\r', '\n']).to_owned());
        }
        Ok(replies)
    }
}

impl Drop for ExternalProcess {
    fn drop(&mut self) {
        if let Ok(pipe) = self.pipe.get_mut() {
            let _ = pipe.child.kill();
            let _ = pipe.child.wait();
        }
    }
}

/// One request line: comma-separated shortest round-trip decimals.
pub fn encode_request(x: &[f64]) -> String {
    let mut s = x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

pub fn decode_request(line: &str) -> Result<Vec<f64>> {
    line.trim()
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| MesError::Format(format!("bad request value {t:?}")))
        })
        .collect()
}

pub fn parse_binary_reply(reply: &str) -> Result<bool> {
    match reply {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(MesError::Transport(format!(
            "malformed reply {other:?}, expected \"0\" or \"1\""
        ))),
    }
}

pub fn parse_class_reply(reply: &str) -> Result<u32> {
    reply
        .trim()
        .parse()
        .map_err(|_| MesError::Transport(format!("malformed class reply {reply:?}")))
}

impl BlackBox for ExternalProcess {
    fn predict(&self, x: &[f64]) -> Result<bool> {
        parse_binary_reply(&self.exchange(&[x])?[0])
    }

    fn predict_batch(&self, xs: &[FeatureVector]) -> Result<Vec<bool>> {
        let refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        self.exchange(&refs)?.iter().map(|r| parse_binary_reply(r)).collect()
    }

    fn dim(&self) -> Option<usize> {
        self.dim
    }

    fn is_thread_safe(&self) -> bool {
        false
    }
}

impl MulticlassModel for ExternalProcess {
    fn predict_class(&self, x: &[f64]) -> Result<u32> {
        parse_class_reply(&self.exchange(&[x])?[0])
    }

    fn predict_classes(&self, xs: &[FeatureVector]) -> Result<Vec<u32>> {
        let refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        self.exchange(&refs)?.iter().map(|r| parse_class_reply(r)).collect()
    }

    fn is_thread_safe(&self) -> bool {
        false
    }
}

/// Serves `model` over the line protocol until `input` closes.
pub fn serve<R: BufRead, W: Write>(model: &dyn BlackBox, input: R, mut output: W) -> Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let x = decode_request(&line)?;
        let label = model.predict(&x)?;
        writeln!(output, "{}", label as u8)?;
        output.flush()?;
    }
    Ok(())
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub index: usize,
    pub sample: Vec<f64>,
    /// `None` when the sample could not be evaluated.
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Quantitative outcome of a sampled law check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub samples_used: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub failures: Vec<Failure>,
    pub pass: bool,
}

impl CheckReport {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// `Ok(self)` when passing, otherwise a precondition error carrying the report.
    pub fn gate(self) -> Result<Self> {
        if self.pass {
            Ok(self)
        } else {
            Err(Error::Precondition(Box::new(self)))
        }
    }

    /// One report covering several parts; passes iff every part passes.
    pub fn merge(name: impl Into<String>, parts: &[CheckReport]) -> CheckReport {
        let tolerance = parts.iter().map(|p| p.tolerance).fold(0.0, f64::max);
        CheckReport {
            name: name.into(),
            samples_used: parts.iter().map(|p| p.samples_used).max().unwrap_or(0),
            max_residual: parts.iter().map(|p| p.max_residual).fold(0.0, f64::max),
            tolerance,
            seed: parts.iter().find_map(|p| p.seed),
            failures: parts
                .iter()
                .flat_map(|p| p.failures.iter().cloned())
                .collect(),
            pass: parts.iter().all(|p| p.pass),
        }
    }
}

pub(crate) struct ReportBuilder {
    name: String,
    tol: f64,
    samples: usize,
    max: f64,
    failures: Vec<Failure>,
}

impl ReportBuilder {
    pub fn new(name: impl Into<String>, tol: f64) -> Self {
        ReportBuilder {
            name: name.into(),
            tol,
            samples: 0,
            max: 0.0,
            failures: Vec::new(),
        }
    }

    pub fn record(&mut self, index: usize, sample: &[f64], residual: Result<f64>) {
        self.samples += 1;
        match residual {
            Ok(r) if r.is_nan() => self.fail(index, sample, None, Some("residual is NaN".into())),
            Ok(r) => {
                self.max = self.max.max(r);
                if r > self.tol {
                    self.fail(index, sample, Some(r), None);
                }
            }
            Err(e) => self.fail(index, sample, None, Some(e.to_string())),
        }
    }

    /// A failure that is not a residual, e.g. a violated monotonicity.
    pub fn violation(&mut self, index: usize, sample: &[f64], message: impl Into<String>) {
        self.fail(index, sample, None, Some(message.into()));
    }

    fn fail(&mut self, index: usize, sample: &[f64], residual: Option<f64>, error: Option<String>) {
        self.failures.push(Failure {
            index,
            sample: sample.to_vec(),
            residual,
            error,
        });
    }

    pub fn finish(self) -> CheckReport {
        CheckReport {
            pass: self.failures.is_empty() && self.max <= self.tol,
            name: self.name,
            samples_used: self.samples,
            max_residual: self.max,
            tolerance: self.tol,
            seed: None,
            failures: self.failures,
        }
    }
}

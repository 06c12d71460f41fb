//! The full derivation pipeline: regimes, assembly per regime, global
//! deduplication, verification and output.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dsl::{InputDocument, ParseError};
use super::records::{IdentityRecord, VerificationSummary};
use super::render::{identity_latex, identity_text, trace_latex, trace_text};
use crate::assembler::{assemble, dedupe, AssemblyError, AssemblyOptions, Mode, ParamOrder, QBinomialIdentity};
use crate::constraints::enumerate_regimes;
use crate::verifier::{verify, VerificationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Latex,
    #[default]
    Text,
    Records,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "latex" => Ok(OutputFormat::Latex),
            "text" => Ok(OutputFormat::Text),
            "records" => Ok(OutputFormat::Records),
            _ => Err(format!("unknown format {s:?}")),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Latex => "latex",
            OutputFormat::Text => "text",
            OutputFormat::Records => "records",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub max_regimes: usize,
    /// Node budget for the regime search and for each assembly search.
    pub budget: u64,
    pub samples: usize,
    pub bound: i64,
    pub seed: u64,
    pub format: OutputFormat,
    pub trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Basic,
            max_regimes: 1024,
            budget: 1_000_000,
            samples: 20,
            bound: 6,
            seed: 0,
            format: OutputFormat::Text,
            trace: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        1
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |what: &str| Err(PipelineError::Config(format!("{what} must be positive")));
        if self.max_regimes == 0 {
            return bad("max regimes");
        }
        if self.budget == 0 {
            return bad("budget");
        }
        if self.samples == 0 {
            return bad("sample count");
        }
        if self.bound < 1 {
            return bad("bound");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct VerifiedIdentity {
    pub identity: QBinomialIdentity,
    pub report: VerificationReport,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegimeSummary {
    pub constraints: Vec<String>,
    pub nodes: u64,
    pub exhausted: bool,
    pub identities: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub identities: Vec<VerifiedIdentity>,
    pub regimes: Vec<RegimeSummary>,
    /// Regimes beyond `max_regimes` were dropped.
    pub regimes_truncated: bool,
    pub regime_search_exhausted: bool,
}

impl RunResult {
    pub fn failures(&self) -> usize {
        self.identities.iter().filter(|v| !v.report.passed()).count()
    }

    /// Some search stopped early, so the results may be partial.
    pub fn partial(&self) -> bool {
        self.regimes_truncated || self.regime_search_exhausted || self.regimes.iter().any(|r| r.exhausted)
    }

    /// 0 success, 2 verification failure, 3 partial results.
    pub fn exit_code(&self) -> i32 {
        if self.failures() > 0 {
            2
        } else if self.partial() {
            3
        } else {
            0
        }
    }
}

/// Derives, deduplicates, verifies and canonically orders every identity
/// reachable from `doc`.
pub fn run(doc: &InputDocument, config: &RunConfig) -> Result<RunResult, PipelineError> {
    config.validate()?;
    let input = doc.to_identity()?;
    let mut set = enumerate_regimes(&input, config.budget);
    let regimes_truncated = set.regimes.len() > config.max_regimes;
    set.regimes.truncate(config.max_regimes);
    let options = AssemblyOptions { mode: config.mode, budget: config.budget, param_order: ParamOrder::Declared };
    let outcomes: Vec<_> = set
        .regimes
        .par_iter()
        .map(|r| assemble(&input, r, options))
        .collect::<Result<_, _>>()?;
    let mut all = Vec::new();
    let mut regimes = Vec::new();
    for (r, out) in set.regimes.iter().zip(outcomes) {
        regimes.push(RegimeSummary {
            constraints: r.node.describe(&input.vars),
            nodes: out.nodes,
            exhausted: out.exhausted,
            identities: out.identities.len(),
        });
        all.extend(out.identities);
    }
    let identities = dedupe(all);
    let identities = identities
        .into_par_iter()
        .map(|identity| {
            let report = verify(&identity, config.samples, config.bound, config.seed);
            VerifiedIdentity { identity, report }
        })
        .collect();
    Ok(RunResult { identities, regimes, regimes_truncated, regime_search_exhausted: set.exhausted })
}

fn status(v: &VerifiedIdentity) -> String {
    let r = &v.report;
    let mut s = if r.passed() {
        format!("verified on {} assignments", r.checked)
    } else {
        format!(
            "FAILED: {} mismatches, {} errors on {} assignments",
            r.mismatches.len(),
            r.errors.len(),
            r.checked
        )
    };
    if !r.bound_tight() {
        s.push_str("; summand nonzero past the upper limit");
    }
    s
}

/// Renders a run in the configured format.
pub fn emit(result: &RunResult, config: &RunConfig) -> String {
    let mut out = String::new();
    for (i, v) in result.identities.iter().enumerate() {
        let id = &v.identity;
        match config.format {
            OutputFormat::Records => {
                let summary =
                    VerificationSummary::new(&id.vars, &v.report, config.samples, config.bound, config.seed);
                out.push_str(&IdentityRecord::new(i, id, summary, config.trace).to_line());
                out.push('\n');
            }
            OutputFormat::Text => {
                out.push_str(&format!("[{}] {}\n", i + 1, identity_text(id)));
                out.push_str(&format!("    where {}\n", id.constraint.describe(&id.vars).join(", ")));
                out.push_str(&format!("    {}\n", status(v)));
                if config.trace {
                    for line in trace_text(id) {
                        out.push_str(&format!("      {line}\n"));
                    }
                }
            }
            OutputFormat::Latex => {
                out.push_str(&format!("% [{}] {}\n", i + 1, status(v)));
                out.push_str(&format!("% where {}\n", id.constraint.describe(&id.vars).join(", ")));
                out.push_str(&format!("\\begin{{equation}}\n{}\n\\end{{equation}}\n", identity_latex(id)));
                if config.trace {
                    out.push_str(&format!("\\[\n{}\n\\]\n", trace_latex(id)));
                }
            }
        }
    }
    out
}

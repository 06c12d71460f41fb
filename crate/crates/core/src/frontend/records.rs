//! Line-delimited JSON records, one self-contained record per identity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::render::{identity_latex, identity_text, trace_text};
use crate::assembler::QBinomialIdentity;
use crate::expr::{Assignment, VarTable};
use crate::verifier::VerificationReport;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MismatchSummary {
    pub assignment: BTreeMap<String, i64>,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub passed: bool,
    pub checked: usize,
    pub samples: usize,
    pub bound: i64,
    pub seed: u64,
    pub bound_tight: bool,
    pub mismatches: Vec<MismatchSummary>,
    pub errors: Vec<String>,
}

pub fn named(vars: &VarTable, at: &Assignment) -> BTreeMap<String, i64> {
    at.iter().map(|(v, x)| (vars.name(*v).to_string(), *x)).collect()
}

impl VerificationSummary {
    pub fn new(vars: &VarTable, report: &VerificationReport, samples: usize, bound: i64, seed: u64) -> Self {
        VerificationSummary {
            passed: report.passed(),
            checked: report.checked,
            samples,
            bound,
            seed,
            bound_tight: report.bound_tight(),
            mismatches: report
                .mismatches
                .iter()
                .map(|m| MismatchSummary {
                    assignment: named(vars, &m.assignment),
                    lhs: m.lhs.to_string(),
                    rhs: m.rhs.to_string(),
                })
                .collect(),
            errors: report
                .errors
                .iter()
                .map(|(at, e)| {
                    let at: Vec<String> = named(vars, at).iter().map(|(k, v)| format!("{k}={v}")).collect();
                    format!("{} at {{{}}}", e, at.join(", "))
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub index: usize,
    pub text: String,
    pub latex: String,
    pub constraints: Vec<String>,
    pub upper_bound: Vec<String>,
    pub verification: VerificationSummary,
    /// Readable trace, present when trace emission is on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<String>>,
    /// Structured identity, including its full proof trace.
    pub identity: QBinomialIdentity,
}

impl IdentityRecord {
    pub fn new(index: usize, identity: &QBinomialIdentity, verification: VerificationSummary, trace: bool) -> Self {
        let v = &identity.vars;
        IdentityRecord {
            index,
            text: identity_text(identity),
            latex: identity_latex(identity),
            constraints: identity.constraint.describe(v),
            upper_bound: identity.upper_bound.iter().map(|b| b.display(v)).collect(),
            verification,
            trace: trace.then(|| trace_text(identity)),
            identity: identity.clone(),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

/// Parses a records stream, skipping blank lines.
pub fn read_records(text: &str) -> Result<Vec<IdentityRecord>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

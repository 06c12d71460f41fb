//! Turn a specialized bracket identity into q-binomial identities by
//! eliminating one variable at a time: the summation variable on the sum
//! side, then every parameter on the product side.

mod search;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backtrack::backtrack;
use crate::constraints::{specialize, ConstraintNode, Regime};
use crate::expr::{AffineExpr, Assignment, ExprError, VarId, VarTable};
use crate::qalg::{HypergeometricIdentity, QBinomial, QalgError, SumCoefficient};
use crate::trace::{replay, Orientation, ProofTrace, ResidualFactor, TraceError, TraceState};

use search::AssemblySearch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Numerator binomials only; every bracket must pair into a binomial.
    Basic,
    /// Also denominator binomials on the product side and residual factors.
    Plus,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Basic => "basic",
            Mode::Plus => "plus",
        })
    }
}

/// Which parameter orders the product side is eliminated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ParamOrder {
    #[default]
    Declared,
    /// Every permutation; results are deduplicated.
    All,
}

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error(transparent)]
    Qalg(#[from] QalgError),
    #[error("trace replay failed: {0}")]
    Trace(#[from] TraceError),
    #[error("trace replay does not reproduce the assembled state")]
    ReplayMismatch,
    #[error("brackets survive on the {0} side")]
    SurvivingBrackets(&'static str),
    #[error("a denominator binomial remains in the summand")]
    SummandDenominator,
}

/// `floor(expr / divisor)` with `divisor >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BoundTerm {
    pub expr: AffineExpr,
    pub divisor: i64,
}

impl BoundTerm {
    pub fn eval(&self, at: &Assignment) -> Result<i64, ExprError> {
        Ok(num_integer::Integer::div_floor(&self.expr.eval(at)?, &self.divisor))
    }

    pub fn display(&self, vars: &VarTable) -> String {
        if self.divisor == 1 {
            self.expr.display(vars).to_string()
        } else {
            format!("floor(({})/{})", self.expr.display(vars), self.divisor)
        }
    }
}

/// `Σ_{n=0}^{min bounds} coeff · ∏lhs_binomials · lhs_residuals
///   = ∏rhs_binomials · rhs_residuals`, valid on the constraint frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QBinomialIdentity {
    pub vars: VarTable,
    pub coeff: SumCoefficient,
    pub lhs_binomials: Vec<QBinomial>,
    pub lhs_residuals: Vec<ResidualFactor>,
    pub rhs_binomials: Vec<QBinomial>,
    pub rhs_residuals: Vec<ResidualFactor>,
    pub upper_bound: Vec<BoundTerm>,
    pub constraint: ConstraintNode,
    pub trace: ProofTrace,
}

/// Everything that identifies an identity apart from its frame and trace.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NormalForm {
    pub coeff: SumCoefficient,
    pub lhs_binomials: Vec<QBinomial>,
    pub lhs_residuals: Vec<ResidualFactor>,
    pub rhs_binomials: Vec<QBinomial>,
    pub rhs_residuals: Vec<ResidualFactor>,
    pub upper_bound: Vec<BoundTerm>,
}

impl QBinomialIdentity {
    /// Reads the final state of a derivation. Product-side denominator
    /// binomials are moved into the summand, where they are constants.
    pub fn from_state(
        vars: &VarTable,
        state: &TraceState,
        constraint: ConstraintNode,
        trace: ProofTrace,
    ) -> Result<Self, AssemblyError> {
        if !state.lhs.is_one() {
            return Err(AssemblyError::SurvivingBrackets("sum"));
        }
        if !state.rhs.is_one() {
            return Err(AssemblyError::SurvivingBrackets("product"));
        }
        let mut lhs_binomials = Vec::new();
        for (b, o) in &state.lhs_binomials {
            if *o == Orientation::Denominator {
                return Err(AssemblyError::SummandDenominator);
            }
            lhs_binomials.push(b.clone());
        }
        let mut rhs_binomials = Vec::new();
        for (b, o) in &state.rhs_binomials {
            match o {
                Orientation::Numerator => rhs_binomials.push(b.clone()),
                Orientation::Denominator => lhs_binomials.push(b.clone()),
            }
        }
        let upper_bound = derive_bounds(&lhs_binomials, vars.summation());
        Ok(QBinomialIdentity {
            vars: vars.clone(),
            coeff: state.coeff.clone(),
            lhs_binomials,
            lhs_residuals: state.lhs_residuals.clone(),
            rhs_binomials,
            rhs_residuals: state.rhs_residuals.clone(),
            upper_bound,
            constraint,
            trace,
        })
    }

    pub fn normal_form(&self) -> NormalForm {
        let canon = |bs: &[QBinomial]| {
            let mut v: Vec<QBinomial> = bs.iter().map(QBinomial::canonical).collect();
            v.sort();
            v
        };
        let sorted = |rs: &[ResidualFactor]| {
            let mut v = rs.to_vec();
            v.sort();
            v
        };
        let mut upper_bound = self.upper_bound.clone();
        upper_bound.sort();
        upper_bound.dedup();
        NormalForm {
            coeff: self.coeff.clone(),
            lhs_binomials: canon(&self.lhs_binomials),
            lhs_residuals: sorted(&self.lhs_residuals),
            rhs_binomials: canon(&self.rhs_binomials),
            rhs_residuals: sorted(&self.rhs_residuals),
            upper_bound,
        }
    }

    /// Same normal form on the same region.
    pub fn equivalent(&self, other: &QBinomialIdentity) -> bool {
        self.normal_form() == other.normal_form() && self.constraint.frame.same_span(&other.constraint.frame)
    }

    pub fn has_residuals(&self) -> bool {
        !self.lhs_residuals.is_empty() || !self.rhs_residuals.is_empty()
    }

    /// Plain one-line rendering.
    pub fn display(&self) -> String {
        let v = &self.vars;
        let binoms = |bs: &[QBinomial]| -> Vec<String> {
            bs.iter()
                .map(|b| {
                    let base = if b.step == 1 { String::new() } else { format!("_q^{}", b.step) };
                    format!("binom({}, {}){base}", b.top.display(v), b.bottom.display(v))
                })
                .collect()
        };
        let residuals = |rs: &[ResidualFactor]| -> Vec<String> {
            rs.iter()
                .map(|r| {
                    let inv = if r.orientation == Orientation::Denominator { "^-1" } else { "" };
                    if r.step == 1 {
                        format!("(1-q^({})){inv}", r.expr.display(v))
                    } else {
                        format!("(1-q^({}*({}))){inv}", r.step, r.expr.display(v))
                    }
                })
                .collect()
        };
        let mut lhs = Vec::new();
        if !self.coeff.sign.is_even() {
            lhs.push(format!("(-1)^({})", self.coeff.sign.expr().display(v)));
        }
        if !self.coeff.q_exp.is_zero() {
            lhs.push(format!("q^({})", self.coeff.q_exp.display(v)));
        }
        lhs.extend(binoms(&self.lhs_binomials));
        lhs.extend(residuals(&self.lhs_residuals));
        let mut rhs = binoms(&self.rhs_binomials);
        rhs.extend(residuals(&self.rhs_residuals));
        let bound = match self.upper_bound.len() {
            0 => "inf".to_string(),
            1 => self.upper_bound[0].display(v),
            _ => format!(
                "min({})",
                self.upper_bound.iter().map(|b| b.display(v)).collect::<Vec<_>>().join(", ")
            ),
        };
        let join = |xs: Vec<String>| if xs.is_empty() { "1".to_string() } else { xs.join(" ") };
        format!("sum_{{{}=0}}^{{{bound}}} {} = {}", v.name(v.summation()), join(lhs), join(rhs))
    }
}

/// Upper summation limits implied by the summand's binomials: each index
/// (top, bottom, top - bottom) that decreases in the summation variable
/// must stay nonnegative.
pub fn derive_bounds(lhs_binomials: &[QBinomial], summation: VarId) -> Vec<BoundTerm> {
    let mut out = Vec::new();
    for b in lhs_binomials {
        for e in [b.top.clone(), b.bottom.clone(), b.complement()] {
            let c = e.coeff(summation);
            if c < 0 {
                out.push(BoundTerm { expr: e.without(summation), divisor: -c });
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

#[derive(Debug, Clone)]
pub struct AssemblyOutcome {
    pub identities: Vec<QBinomialIdentity>,
    pub nodes: u64,
    pub exhausted: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct AssemblyOptions {
    pub mode: Mode,
    pub budget: u64,
    pub param_order: ParamOrder,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { mode: Mode::Basic, budget: 1_000_000, param_order: ParamOrder::Declared }
    }
}

/// All assemblies of `identity` under one regime, deduplicated.
pub fn assemble(
    identity: &HypergeometricIdentity,
    regime: &Regime,
    options: AssemblyOptions,
) -> Result<AssemblyOutcome, AssemblyError> {
    let mut out = AssemblyOutcome { identities: Vec::new(), nodes: 0, exhausted: false };
    let Some(spec) = specialize(identity, regime)? else {
        return Ok(out);
    };
    let mut start = TraceState::start(identity);
    for s in &spec.steps {
        start.apply(s);
    }
    let params: Vec<VarId> = identity.vars.params().collect();
    let orders = match options.param_order {
        ParamOrder::Declared => vec![params],
        ParamOrder::All => permutations(&params),
    };
    for order in orders {
        let mut search = AssemblySearch::new(&identity.vars, options.mode, start.clone(), &regime.node, order);
        let found = backtrack(&mut search, options.budget.saturating_sub(out.nodes));
        out.nodes += found.nodes;
        out.exhausted |= found.exhausted;
        for a in found.solutions {
            let mut steps = spec.steps.clone();
            steps.extend(a.steps);
            let trace = ProofTrace { steps };
            if replay(identity, &trace)? != a.state {
                return Err(AssemblyError::ReplayMismatch);
            }
            let node = ConstraintNode { frame: a.frame, history: regime.node.history.clone() };
            out.identities.push(QBinomialIdentity::from_state(&identity.vars, &a.state, node, trace)?);
        }
        if out.exhausted {
            break;
        }
    }
    out.identities = dedupe(out.identities);
    Ok(out)
}

/// Canonical order: normal form, then frame generators. Equivalent
/// identities keep their first representative.
pub fn dedupe(mut ids: Vec<QBinomialIdentity>) -> Vec<QBinomialIdentity> {
    ids.sort_by(canonical_cmp);
    let mut out: Vec<QBinomialIdentity> = Vec::with_capacity(ids.len());
    for id in ids {
        let nf = id.normal_form();
        let dup = out
            .iter()
            .rev()
            .take_while(|o| o.normal_form() == nf)
            .any(|o| o.constraint.frame.same_span(&id.constraint.frame));
        if !dup {
            out.push(id);
        }
    }
    out
}

pub fn canonical_cmp(a: &QBinomialIdentity, b: &QBinomialIdentity) -> Ordering {
    a.normal_form()
        .cmp(&b.normal_form())
        .then_with(|| a.constraint.frame.generators().cmp(b.constraint.frame.generators()))
        .then_with(|| a.trace.steps.len().cmp(&b.trace.steps.len()))
}

fn permutations(v: &[VarId]) -> Vec<Vec<VarId>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

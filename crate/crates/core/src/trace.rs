//! Proof traces: the replayable sequence of bracket rewrites that turns an
//! input identity into an emitted q-binomial identity.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{AffineExpr, Assignment, ExprError, VarId, VarTable};
use crate::poly::QPolynomial;
use crate::qalg::{
    eliminate_subscript, BracketFraction, Elimination, HypergeometricIdentity, PositivityCase,
    QBinomial, SquareBracket, SumCoefficient,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Numerator,
    Denominator,
}

impl Orientation {
    pub fn flip(self) -> Self {
        match self {
            Orientation::Numerator => Orientation::Denominator,
            Orientation::Denominator => Orientation::Numerator,
        }
    }

    fn apply(self, f: BracketFraction) -> BracketFraction {
        match self {
            Orientation::Numerator => f,
            Orientation::Denominator => f.inv(),
        }
    }
}

/// The scalar `1 - q^(step·expr)`, in the numerator or the denominator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ResidualFactor {
    pub orientation: Orientation,
    pub expr: AffineExpr,
    pub step: u32,
}

impl ResidualFactor {
    /// `[e;k] / [e+1;k]`, inverted for the denominator.
    pub fn to_brackets(&self) -> BracketFraction {
        self.orientation.apply(BracketFraction::new(
            vec![SquareBracket::pure(self.expr.clone(), self.step)],
            vec![SquareBracket::pure(&self.expr + 1, self.step)],
        ))
    }

    pub fn expand(&self, at: &Assignment) -> Result<QPolynomial, ExprError> {
        Ok(QPolynomial::one_minus_q_pow(self.step as i64 * self.expr.eval(at)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    /// The summand.
    Lhs,
    /// The product side.
    Rhs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleKind {
    SubscriptElim,
    Rule1,
    Rule2,
    Rule3,
    PairwiseSingle,
    ResidualExtract,
    MoveToProductSide,
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RuleKind::SubscriptElim => "subscript elimination",
            RuleKind::Rule1 => "rule 1",
            RuleKind::Rule2 => "rule 2",
            RuleKind::Rule3 => "rule 3",
            RuleKind::PairwiseSingle => "pairwise",
            RuleKind::ResidualExtract => "residual",
            RuleKind::MoveToProductSide => "move to product side",
        };
        f.write_str(s)
    }
}

/// One rewrite: on `side`, the brackets `before` are replaced by
/// `after · binomial · residuals`, and the summand coefficient gains
/// `coeff_delta`. For `MoveToProductSide`, `before` leaves the summand and
/// `after` (its inverse) joins the product side.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProofStep {
    pub rule: RuleKind,
    pub side: Side,
    pub variable: Option<VarId>,
    pub before: BracketFraction,
    pub after: BracketFraction,
    pub binomial: Option<(QBinomial, Orientation)>,
    pub residuals: Vec<ResidualFactor>,
    /// Value factor pulled out on `side`: `before = coeff_delta · after`.
    pub coeff_delta: Option<SumCoefficient>,
    /// New constraint `e >= 1` recorded by this step.
    pub inequality: Option<AffineExpr>,
}

impl ProofStep {
    /// The rewrite preserves value as a bracket identity. Subscript
    /// elimination is checked by recomputing it.
    pub fn check_symbolic(&self) -> bool {
        match self.rule {
            RuleKind::MoveToProductSide => self.after == self.before.inv(),
            RuleKind::SubscriptElim => {
                let ([b], []) = (self.before.num(), self.before.den()) else {
                    let ([], [b]) = (self.before.num(), self.before.den()) else {
                        return false;
                    };
                    return self.matches_elimination(b, true);
                };
                self.matches_elimination(b, false)
            }
            _ => {
                let mut produced = self.after.clone();
                if let Some((b, o)) = &self.binomial {
                    produced = produced.mul(&o.apply(b.to_brackets()));
                }
                for r in &self.residuals {
                    produced = produced.mul(&r.to_brackets());
                }
                produced == self.before && self.coeff_delta.is_none()
            }
        }
    }

    fn matches_elimination(&self, b: &SquareBracket, inverted: bool) -> bool {
        [PositivityCase::SubscriptedArgPositive, PositivityCase::SubscriptedArgVeryNegative]
            .into_iter()
            .any(|case| match eliminate_subscript(b, case) {
                Ok(Elimination::Value { coeff, fraction }) => {
                    let (coeff, fraction) =
                        if inverted { (coeff.inv(), fraction.inv()) } else { (coeff, fraction) };
                    let delta = self.coeff_delta.clone().unwrap_or_default();
                    fraction == self.after && coeff == delta
                }
                _ => false,
            })
    }

    pub fn describe(&self, vars: &VarTable) -> String {
        let place = match (self.rule, self.side) {
            (RuleKind::MoveToProductSide, _) => String::new(),
            (_, Side::Lhs) => " on sum side".to_string(),
            (_, Side::Rhs) => " on product side".to_string(),
        };
        let mut s = format!("{}{place}: {} => {}", self.rule, self.before.display(vars), self.after.display(vars));
        if let Some((b, o)) = &self.binomial {
            let inv = if *o == Orientation::Denominator { "^-1" } else { "" };
            let base = if b.step == 1 { String::new() } else { format!("_q^{}", b.step) };
            s.push_str(&format!(" * binom({}, {}){base}{inv}", b.top.display(vars), b.bottom.display(vars)));
        }
        for r in &self.residuals {
            let inv = if r.orientation == Orientation::Denominator { "^-1" } else { "" };
            if r.step == 1 {
                s.push_str(&format!(" * (1-q^({})){inv}", r.expr.display(vars)));
            } else {
                s.push_str(&format!(" * (1-q^({}*({}))){inv}", r.step, r.expr.display(vars)));
            }
        }
        if let Some(e) = &self.inequality {
            s.push_str(&format!(" [{} >= 1]", e.display(vars)));
        }
        s
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProofTrace {
    pub steps: Vec<ProofStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("step {0}: consumed brackets are not present")]
    MissingBrackets(usize),
    #[error("step {0}: rewrite is not a bracket identity")]
    NotAnIdentity(usize),
}

/// Both sides of an identity mid-derivation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceState {
    pub coeff: SumCoefficient,
    pub lhs: BracketFraction,
    pub rhs: BracketFraction,
    pub lhs_binomials: Vec<(QBinomial, Orientation)>,
    pub rhs_binomials: Vec<(QBinomial, Orientation)>,
    pub lhs_residuals: Vec<ResidualFactor>,
    pub rhs_residuals: Vec<ResidualFactor>,
}

impl TraceState {
    pub fn start(input: &HypergeometricIdentity) -> Self {
        TraceState {
            coeff: input.coeff.clone(),
            lhs: input.sum_fraction.clone(),
            rhs: input.product_fraction.clone(),
            lhs_binomials: Vec::new(),
            rhs_binomials: Vec::new(),
            lhs_residuals: Vec::new(),
            rhs_residuals: Vec::new(),
        }
    }

    /// Applies one step without checks.
    pub fn apply(&mut self, step: &ProofStep) {
        if step.rule == RuleKind::MoveToProductSide {
            self.lhs = self.lhs.div(&step.before);
            self.rhs = self.rhs.mul(&step.after);
            return;
        }
        let (frac, binoms, residuals) = match step.side {
            Side::Lhs => (&mut self.lhs, &mut self.lhs_binomials, &mut self.lhs_residuals),
            Side::Rhs => (&mut self.rhs, &mut self.rhs_binomials, &mut self.rhs_residuals),
        };
        *frac = frac.div(&step.before).mul(&step.after);
        if let Some(b) = &step.binomial {
            binoms.push(b.clone());
        }
        residuals.extend(step.residuals.iter().cloned());
        if let Some(d) = &step.coeff_delta {
            self.coeff = match step.side {
                Side::Lhs => self.coeff.mul(d),
                Side::Rhs => self.coeff.mul(&d.inv()),
            };
        }
    }

    fn side(&self, side: Side) -> &BracketFraction {
        match side {
            Side::Lhs => &self.lhs,
            Side::Rhs => &self.rhs,
        }
    }
}

fn contains(whole: &BracketFraction, part: &BracketFraction) -> bool {
    let sub = |big: &[SquareBracket], small: &[SquareBracket]| {
        let mut big = big.to_vec();
        small.iter().all(|b| match big.iter().position(|x| x == b) {
            Some(i) => {
                big.remove(i);
                true
            }
            None => false,
        })
    };
    sub(whole.num(), part.num()) && sub(whole.den(), part.den())
}

/// Replays `trace` from `input`, checking each step consumes brackets that
/// are present and is a valid rewrite.
pub fn replay(input: &HypergeometricIdentity, trace: &ProofTrace) -> Result<TraceState, TraceError> {
    let mut state = TraceState::start(input);
    for (i, step) in trace.steps.iter().enumerate() {
        let from = if step.rule == RuleKind::MoveToProductSide { Side::Lhs } else { step.side };
        if !contains(state.side(from), &step.before) {
            return Err(TraceError::MissingBrackets(i));
        }
        if !step.check_symbolic() {
            return Err(TraceError::NotAnIdentity(i));
        }
        state.apply(step);
    }
    Ok(state)
}

//! The constraint-condition tree: branch over the sign regimes of bracket
//! arguments while keeping a consistent integer frame at every node.

use serde::{Deserialize, Serialize};

use crate::backtrack::{backtrack, Search};
use crate::cone::{extend_frame, is_member, is_neg_member, ConeError, ConeFrame, IntVector};
use crate::expr::{AffineExpr, VarTable};
use crate::qalg::{
    eliminate_subscript, BracketFraction, Elimination, HypergeometricIdentity, QalgError,
    SquareBracket, Subscript, SumCoefficient,
};
use crate::trace::{ProofStep, RuleKind, Side};

pub use crate::qalg::PositivityCase;

/// Why a node exists: the bracket that was branched on and the case chosen.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub bracket: SquareBracket,
    pub case: PositivityCase,
    /// Inequalities `e >= 1` requested by this branch.
    pub requested: Vec<AffineExpr>,
}

/// A feasible sign regime. The frame's generators are exactly the recorded
/// inequalities; `history` is the chain of branches from the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstraintNode {
    pub frame: ConeFrame,
    pub history: Vec<Provenance>,
}

impl ConstraintNode {
    pub fn root(vars: &VarTable) -> Self {
        ConstraintNode { frame: ConeFrame::empty(vars.dim()), history: Vec::new() }
    }

    /// The inequalities `e >= 1`, one per generator.
    pub fn inequalities(&self) -> Vec<AffineExpr> {
        self.frame.inequalities()
    }

    pub fn describe(&self, vars: &VarTable) -> Vec<String> {
        self.frame.describe(vars)
    }

    pub fn is_consistent(&self) -> bool {
        crate::cone::is_consistent(&self.frame)
    }

    fn phi(&self, e: &AffineExpr) -> IntVector {
        IntVector::from_affine(e, self.frame.dim())
    }

    /// `e >= 1` already follows from the node.
    pub fn implies_positive(&self, e: &AffineExpr) -> bool {
        is_member(&self.frame, &self.phi(e))
    }

    /// `e >= 1` contradicts the node, i.e. `e - 1` is forced negative.
    pub fn forbids_positive(&self, e: &AffineExpr) -> bool {
        is_neg_member(&self.frame, &self.phi(&(e - 1)))
    }

    /// Adds `e >= 1` if consistent. This is Algorithm 3's guarded extension.
    pub fn assume_positive(&self, e: &AffineExpr) -> Option<ConeFrame> {
        if self.forbids_positive(e) {
            return None;
        }
        match extend_frame(&self.frame, &self.phi(e)) {
            Ok(f) => Some(f),
            Err(ConeError::Inconsistent) => None,
            Err(e) => panic!("frame dimension is fixed by the variable table: {e}"),
        }
    }

    fn child(&self, frame: ConeFrame, bracket: &SquareBracket, case: PositivityCase, requested: Vec<AffineExpr>) -> Self {
        let mut history = self.history.clone();
        history.push(Provenance { bracket: bracket.clone(), case, requested });
        ConstraintNode { frame, history }
    }
}

/// Children of `node` for one bracket; an empty result discards the path.
pub fn branch_on_bracket(node: &ConstraintNode, b: &SquareBracket) -> Vec<(ConstraintNode, PositivityCase)> {
    let m = &b.arg;
    match &b.sub {
        Subscript::Infinite => {
            if m.is_constant() {
                // decidable without the cone
                return if m.constant_term() >= 1 {
                    vec![(node.clone(), PositivityCase::PureBracketPositive)]
                } else {
                    vec![]
                };
            }
            let case = PositivityCase::PureBracketPositive;
            node.assume_positive(m)
                .map(|f| vec![(node.child(f, b, case, vec![m.clone()]), case)])
                .unwrap_or_default()
        }
        Subscript::Finite(n) => {
            if n.is_constant() && n.constant_term() == 0 {
                return vec![(node.clone(), PositivityCase::SubscriptedArgPositive)];
            }
            let Some(base) = node.assume_positive(n) else {
                return vec![];
            };
            let base = ConstraintNode { frame: base, history: node.history.clone() };
            if m.is_constant() && m.constant_term() >= 1 {
                let case = PositivityCase::SubscriptedArgPositive;
                return vec![(base.child(base.frame.clone(), b, case, vec![n.clone()]), case)];
            }
            let mut out = Vec::new();
            let case = PositivityCase::SubscriptedArgPositive;
            if let Some(f) = base.assume_positive(m) {
                out.push((base.child(f, b, case, vec![n.clone(), m.clone()]), case));
            }
            // m <= -n, i.e. -m-n+1 >= 1
            let very_negative = &(&(-m) - n) + 1;
            let case = PositivityCase::SubscriptedArgVeryNegative;
            if !base.implies_positive(&(m + 1)) {
                if let Some(f) = base.assume_positive(&very_negative) {
                    out.push((base.child(f, b, case, vec![n.clone(), very_negative]), case));
                }
            }
            out
        }
    }
}

/// Where a bracket sits in the input identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BracketRef {
    pub side: Side,
    pub in_numerator: bool,
    pub bracket: SquareBracket,
}

/// A leaf of the constraint tree with the case chosen for every bracket.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Regime {
    pub node: ConstraintNode,
    pub cases: Vec<(BracketRef, PositivityCase)>,
}

/// Brackets in branching order: sum side (numerator, then denominator),
/// then product side.
pub fn branch_order(identity: &HypergeometricIdentity) -> Vec<BracketRef> {
    let mut out = Vec::new();
    for (side, f) in [(Side::Lhs, &identity.sum_fraction), (Side::Rhs, &identity.product_fraction)] {
        for (in_numerator, list) in [(true, f.num()), (false, f.den())] {
            for b in list {
                out.push(BracketRef { side, in_numerator, bracket: b.clone() });
            }
        }
    }
    out
}

struct RegimeSearch {
    order: Vec<BracketRef>,
    stack: Vec<ConstraintNode>,
    cases: Vec<PositivityCase>,
}

impl Search for RegimeSearch {
    type Choice = (ConstraintNode, PositivityCase);
    type Undo = ();
    type Solution = Regime;

    fn choices(&self) -> Vec<Self::Choice> {
        let depth = self.cases.len();
        if depth >= self.order.len() {
            return vec![];
        }
        branch_on_bracket(self.stack.last().expect("root"), &self.order[depth].bracket)
    }

    fn apply(&mut self, c: &Self::Choice) -> Option<()> {
        self.stack.push(c.0.clone());
        self.cases.push(c.1);
        Some(())
    }

    fn undo(&mut self, _: ()) {
        self.stack.pop();
        self.cases.pop();
    }

    fn solution(&self) -> Option<Regime> {
        (self.cases.len() == self.order.len()).then(|| Regime {
            node: self.stack.last().expect("root").clone(),
            cases: self.order.iter().cloned().zip(self.cases.iter().copied()).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegimeSet {
    pub regimes: Vec<Regime>,
    pub nodes: u64,
    pub exhausted: bool,
}

/// All leaves of the constraint tree, depth first.
pub fn enumerate_regimes(identity: &HypergeometricIdentity, budget: u64) -> RegimeSet {
    let mut search = RegimeSearch {
        order: branch_order(identity),
        stack: vec![ConstraintNode::root(&identity.vars)],
        cases: Vec::new(),
    };
    let out = backtrack(&mut search, budget);
    RegimeSet { regimes: out.solutions, nodes: out.nodes, exhausted: out.exhausted }
}

/// The input identity with every subscript eliminated under a regime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Specialized {
    pub coeff: SumCoefficient,
    pub sum_fraction: BracketFraction,
    pub product_fraction: BracketFraction,
    pub steps: Vec<ProofStep>,
}

/// Eliminates the subscript of every subscripted bracket according to the regime.
/// Product-side coefficients are divided into the summand coefficient.
pub fn specialize(identity: &HypergeometricIdentity, regime: &Regime) -> Result<Option<Specialized>, QalgError> {
    let mut coeff = identity.coeff.clone();
    let mut lhs = identity.sum_fraction.clone();
    let mut rhs = identity.product_fraction.clone();
    let mut steps = Vec::new();
    for (r, case) in &regime.cases {
        if r.bracket.is_pure() {
            continue;
        }
        let (delta, fraction) = match eliminate_subscript(&r.bracket, *case)? {
            Elimination::Zero => return Ok(None),
            Elimination::Value { coeff, fraction } => (coeff, fraction),
        };
        let (before, after, delta) = if r.in_numerator {
            (BracketFraction::of(r.bracket.clone()), fraction, delta)
        } else {
            (BracketFraction::new(vec![], vec![r.bracket.clone()]), fraction.inv(), delta.inv())
        };
        let side_frac = match r.side {
            Side::Lhs => &mut lhs,
            Side::Rhs => &mut rhs,
        };
        *side_frac = side_frac.div(&before).mul(&after);
        coeff = match r.side {
            Side::Lhs => coeff.mul(&delta),
            Side::Rhs => coeff.mul(&delta.inv()),
        };
        steps.push(ProofStep {
            rule: RuleKind::SubscriptElim,
            side: r.side,
            variable: None,
            before,
            after,
            binomial: None,
            residuals: vec![],
            coeff_delta: (!delta.is_one()).then_some(delta),
            inequality: None,
        });
    }
    Ok(Some(Specialized { coeff, sum_fraction: lhs, product_fraction: rhs, steps }))
}

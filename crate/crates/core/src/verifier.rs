//! Exact verification of emitted identities: both sides are expanded as
//! Laurent polynomials in q at concrete parameter values and compared.

use num_integer::Integer;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembler::QBinomialIdentity;
use crate::constraints::ConstraintNode;
use crate::expr::{AffineExpr, Assignment, ExprError, VarId, VarTable};
use crate::poly::QPolynomial;
use crate::trace::{Orientation, ResidualFactor};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("bound must be at least 1")]
    BadBound,
    #[error("no parameter values with |value| <= {0} satisfy the constraints")]
    EmptyDomain(i64),
    #[error("the summation has no upper limit")]
    Unbounded,
    #[error("division by (1-q^{0}) is not exact")]
    InexactDivision(i64),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Range of the summation variable allowed by `ineqs` at `at`, or `None`
/// when a summation-free inequality fails or the range is empty.
fn summation_range(ineqs: &[AffineExpr], n: VarId, at: &Assignment) -> Option<(Option<i64>, Option<i64>)> {
    let mut lo: Option<i64> = None;
    let mut hi: Option<i64> = None;
    let mut at = at.clone();
    at.insert(n, 0);
    for e in ineqs {
        let c = e.coeff(n);
        let rest = e.eval(&at).ok()?;
        // c·n + rest >= 1
        if c == 0 {
            if rest < 1 {
                return None;
            }
        } else if c > 0 {
            let l = Integer::div_ceil(&(1 - rest), &c);
            lo = Some(lo.map_or(l, |x| x.max(l)));
        } else {
            let h = Integer::div_floor(&(rest - 1), &(-c));
            hi = Some(hi.map_or(h, |x| x.min(h)));
        }
    }
    match (lo, hi) {
        (Some(l), Some(h)) if l > h => None,
        r => Some(r),
    }
}

/// Up to `count` parameter assignments in the box `[-bound, bound]` that
/// admit some integer summation value satisfying every inequality of
/// `node`. The whole box is scanned, then shuffled with `seed`.
pub fn sample_assignments(
    vars: &VarTable,
    node: &ConstraintNode,
    count: usize,
    bound: i64,
    seed: u64,
) -> Result<Vec<Assignment>, VerifyError> {
    if bound < 1 {
        return Err(VerifyError::BadBound);
    }
    let params: Vec<VarId> = vars.params().collect();
    let ineqs = node.inequalities();
    let n = vars.summation();
    let mut found = Vec::new();
    let mut point = vec![-bound; params.len()];
    loop {
        let at: Assignment = params.iter().copied().zip(point.iter().copied()).collect();
        if summation_range(&ineqs, n, &at).is_some() {
            found.push(at);
        }
        // odometer over the box
        let mut i = 0;
        while i < point.len() && point[i] == bound {
            point[i] = -bound;
            i += 1;
        }
        if i == point.len() {
            break;
        }
        point[i] += 1;
    }
    if found.is_empty() {
        return Err(VerifyError::EmptyDomain(bound));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    found.shuffle(&mut rng);
    found.truncate(count);
    Ok(found)
}

/// Multiplies numerator residuals into `acc` and divides out denominator
/// ones exactly.
fn apply_residuals(
    mut acc: QPolynomial,
    residuals: &[ResidualFactor],
    at: &Assignment,
) -> Result<QPolynomial, VerifyError> {
    let mut divisors = Vec::new();
    for r in residuals {
        let p = r.expand(at)?;
        match r.orientation {
            Orientation::Numerator => acc = &acc * &p,
            Orientation::Denominator => divisors.push((r.step as i64 * r.expr.eval(at)?, p)),
        }
    }
    for (e, d) in divisors {
        acc = acc.div_exact(&d).ok_or(VerifyError::InexactDivision(e))?;
    }
    Ok(acc)
}

/// The summand at `at`, which must assign the summation variable.
pub fn evaluate_summand(identity: &QBinomialIdentity, at: &Assignment) -> Result<QPolynomial, VerifyError> {
    let mut acc = identity.coeff.expand(at)?;
    for b in &identity.lhs_binomials {
        acc = &acc * &b.expand(at)?;
        if acc.is_zero() {
            return Ok(acc);
        }
    }
    apply_residuals(acc, &identity.lhs_residuals, at)
}

/// The evaluated summation limit `min(bounds)`.
pub fn upper_limit(identity: &QBinomialIdentity, at: &Assignment) -> Result<i64, VerifyError> {
    let mut limit: Option<i64> = None;
    for b in &identity.upper_bound {
        let v = b.eval(at)?;
        limit = Some(limit.map_or(v, |x| x.min(v)));
    }
    limit.ok_or(VerifyError::Unbounded)
}

pub fn evaluate_lhs(identity: &QBinomialIdentity, at: &Assignment) -> Result<QPolynomial, VerifyError> {
    let n = identity.vars.summation();
    let limit = upper_limit(identity, at)?;
    let mut total = QPolynomial::zero();
    let mut at = at.clone();
    for r in 0..=limit {
        at.insert(n, r);
        total = &total + &evaluate_summand(identity, &at)?;
    }
    Ok(total)
}

pub fn evaluate_rhs(identity: &QBinomialIdentity, at: &Assignment) -> Result<QPolynomial, VerifyError> {
    let mut acc = QPolynomial::one();
    for b in &identity.rhs_binomials {
        acc = &acc * &b.expand(at)?;
    }
    apply_residuals(acc, &identity.rhs_residuals, at)
}

/// A sampled assignment where the two sides differ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub assignment: Assignment,
    pub lhs: QPolynomial,
    pub rhs: QPolynomial,
}

impl Mismatch {
    /// `lhs - rhs`.
    pub fn difference(&self) -> QPolynomial {
        &self.lhs - &self.rhs
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checked: usize,
    pub mismatches: Vec<Mismatch>,
    /// Assignments where a side could not be evaluated.
    pub errors: Vec<(Assignment, String)>,
    /// Assignments where the summand is still nonzero just past the upper
    /// limit, so the bound list cuts off live terms.
    pub loose_bound: Vec<Assignment>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checked > 0 && self.mismatches.is_empty() && self.errors.is_empty()
    }

    pub fn bound_tight(&self) -> bool {
        self.loose_bound.is_empty()
    }
}

enum Outcome {
    Agree { loose: bool },
    Differ(Mismatch),
    Error(String),
}

/// How far past the upper limit the tightness diagnostic looks.
const TIGHTNESS_LOOKAHEAD: i64 = 3;

fn check_one(identity: &QBinomialIdentity, at: &Assignment) -> Outcome {
    let sides = evaluate_lhs(identity, at).and_then(|l| Ok((l, evaluate_rhs(identity, at)?)));
    let (lhs, rhs) = match sides {
        Ok(s) => s,
        Err(e) => return Outcome::Error(e.to_string()),
    };
    if lhs != rhs {
        return Outcome::Differ(Mismatch { assignment: at.clone(), lhs, rhs });
    }
    let n = identity.vars.summation();
    let loose = match upper_limit(identity, at) {
        Ok(limit) => (1..=TIGHTNESS_LOOKAHEAD).any(|d| {
            let mut past = at.clone();
            past.insert(n, limit.max(-1) + d);
            evaluate_summand(identity, &past).map(|p| !p.is_zero()).unwrap_or(true)
        }),
        Err(_) => true,
    };
    Outcome::Agree { loose }
}

/// Checks `identity` at up to `samples` assignments drawn from its
/// constraint region within `[-bound, bound]`.
pub fn verify(identity: &QBinomialIdentity, samples: usize, bound: i64, seed: u64) -> VerificationReport {
    let points = match sample_assignments(&identity.vars, &identity.constraint, samples, bound, seed) {
        Ok(p) => p,
        Err(e) => {
            return VerificationReport {
                checked: 0,
                mismatches: vec![],
                errors: vec![(Assignment::new(), e.to_string())],
                loose_bound: vec![],
            }
        }
    };
    verify_at(identity, &points)
}

/// Checks `identity` at the given assignments.
pub fn verify_at(identity: &QBinomialIdentity, points: &[Assignment]) -> VerificationReport {
    let outcomes: Vec<Outcome> = points.par_iter().map(|at| check_one(identity, at)).collect();
    let mut report =
        VerificationReport { checked: points.len(), mismatches: vec![], errors: vec![], loose_bound: vec![] };
    for (at, o) in points.iter().zip(outcomes) {
        match o {
            Outcome::Agree { loose } => {
                if loose {
                    report.loose_bound.push(at.clone());
                }
            }
            Outcome::Differ(m) => report.mismatches.push(m),
            Outcome::Error(e) => report.errors.push((at.clone(), e)),
        }
    }
    report
}

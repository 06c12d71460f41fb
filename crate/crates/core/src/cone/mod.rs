//! Positive spans over the ordered integer vector space.
//!
//! An affine expression `a0 + a1 x1 + ... + an xn` is embedded as the vector
//! `(a0, a1, ..., an)`. A frame `F` stands for the system "every generator is
//! at least 1", and `u` lies in `pos(F)` when
//! `u = λ0·𝟏 + Σ λj (vj − 𝟏)` with `λ0 > 0` and `λj >= 0`, i.e. when
//! `u >= 1` follows from the frame on the integers.

pub mod lp;

use std::collections::HashSet;
use std::fmt;

use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{AffineExpr, Rational, VarTable};
use lp::{maximize_first, LpOutcome};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("frame became inconsistent: the zero vector lies in its positive span")]
    Inconsistent,
}

/// Integer vector with the constant slot at index 0.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IntVector(pub Vec<i64>);

impl IntVector {
    pub fn zero(dim: usize) -> Self {
        IntVector(vec![0; dim])
    }

    /// The vector `𝟏 = (1, 0, ..., 0)`.
    pub fn one(dim: usize) -> Self {
        let mut v = vec![0; dim];
        v[0] = 1;
        IntVector(v)
    }

    pub fn from_affine(e: &AffineExpr, dim: usize) -> Self {
        IntVector(e.to_vector(dim))
    }

    pub fn to_affine(&self) -> AffineExpr {
        AffineExpr::from_vector(&self.0)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| *x == 0)
    }

    pub fn is_one(&self) -> bool {
        self.0[0] == 1 && self.0[1..].iter().all(|x| *x == 0)
    }

    pub fn neg(&self) -> Self {
        IntVector(self.0.iter().map(|x| -x).collect())
    }

    pub fn minus_one(&self) -> Self {
        let mut v = self.clone();
        v.0[0] -= 1;
        v
    }

    fn rational(&self) -> Vec<Rational> {
        self.0.iter().map(|x| Rational::from_integer((*x).into())).collect()
    }
}

/// Finite generating set, kept sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConeFrame {
    dim: usize,
    generators: Vec<IntVector>,
}

impl ConeFrame {
    pub fn empty(dim: usize) -> Self {
        ConeFrame { dim, generators: Vec::new() }
    }

    /// Frame from the given generators without any reduction.
    pub fn from_generators(dim: usize, mut generators: Vec<IntVector>) -> Result<Self, ConeError> {
        for g in &generators {
            check_dim(dim, g)?;
        }
        generators.sort();
        generators.dedup();
        Ok(ConeFrame { dim, generators })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[IntVector] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// The inequalities `e >= 1` this frame encodes.
    pub fn inequalities(&self) -> Vec<AffineExpr> {
        self.generators.iter().map(IntVector::to_affine).collect()
    }

    pub fn describe(&self, vars: &VarTable) -> Vec<String> {
        self.generators
            .iter()
            .map(|g| format!("{} >= 1", g.to_affine().display(vars)))
            .collect()
    }

    fn without(&self, i: usize) -> ConeFrame {
        let mut g = self.generators.clone();
        g.remove(i);
        ConeFrame { dim: self.dim, generators: g }
    }

    /// Two frames span the same cone.
    pub fn same_span(&self, other: &ConeFrame) -> bool {
        let inside = |f: &ConeFrame, gs: &[IntVector]| {
            gs.iter().all(|g| pos_member(f, g).map(|(b, _)| b).unwrap_or(false))
        };
        self.dim == other.dim
            && inside(self, &other.generators)
            && inside(other, &self.generators)
    }
}

/// Witness for a membership answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MembershipCertificate {
    Inside { lambda0: Rational, lambdas: Vec<Rational> },
    /// `w` with `w·𝟏 >= 0`, `w·(v − 𝟏) >= 0` for every generator and
    /// `w·u <= 0`, where `w·u < 0` or `w·𝟏 > 0`.
    Outside { functional: Vec<Rational> },
}

impl fmt::Display for MembershipCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MembershipCertificate::Inside { lambda0, lambdas } => {
                write!(f, "inside: λ0 = {lambda0}, λ = [")?;
                for (i, l) in lambdas.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{l}")?;
                }
                write!(f, "]")
            }
            MembershipCertificate::Outside { functional } => {
                write!(f, "outside: w = [")?;
                for (i, w) in functional.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{w}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl MembershipCertificate {
    pub fn is_inside(&self) -> bool {
        matches!(self, MembershipCertificate::Inside { .. })
    }

    /// Exact re-check of the certificate against `frame` and `u`.
    pub fn validate(&self, frame: &ConeFrame, u: &IntVector) -> bool {
        if u.dim() != frame.dim {
            return false;
        }
        let one = IntVector::one(frame.dim).rational();
        let shifted: Vec<Vec<Rational>> =
            frame.generators.iter().map(|g| g.minus_one().rational()).collect();
        let target = u.rational();
        match self {
            MembershipCertificate::Inside { lambda0, lambdas } => {
                if !lambda0.is_positive()
                    || lambdas.len() != shifted.len()
                    || lambdas.iter().any(Signed::is_negative)
                {
                    return false;
                }
                (0..frame.dim).all(|i| {
                    let mut acc = lambda0 * &one[i];
                    for (l, g) in lambdas.iter().zip(&shifted) {
                        acc += l * &g[i];
                    }
                    acc == target[i]
                })
            }
            MembershipCertificate::Outside { functional } => {
                if functional.len() != frame.dim {
                    return false;
                }
                let dot = |v: &[Rational]| -> Rational {
                    functional.iter().zip(v).map(|(a, b)| a * b).sum()
                };
                let w_one = dot(&one);
                let w_u = dot(&target);
                !w_one.is_negative()
                    && shifted.iter().all(|g| !dot(g).is_negative())
                    && !w_u.is_positive()
                    && (w_u.is_negative() || w_one.is_positive())
            }
        }
    }
}

fn check_dim(dim: usize, u: &IntVector) -> Result<(), ConeError> {
    if u.dim() != dim {
        return Err(ConeError::DimensionMismatch { expected: dim, got: u.dim() });
    }
    Ok(())
}

/// Decides `u ∈ pos(frame)` by maximizing `λ0` exactly.
pub fn pos_member(frame: &ConeFrame, u: &IntVector) -> Result<(bool, MembershipCertificate), ConeError> {
    check_dim(frame.dim, u)?;
    let mut columns = vec![IntVector::one(frame.dim).rational()];
    columns.extend(frame.generators.iter().map(|g| g.minus_one().rational()));
    let cert = match maximize_first(&columns, &u.rational()) {
        LpOutcome::Positive { mut x } => {
            let lambda0 = x.remove(0);
            MembershipCertificate::Inside { lambda0, lambdas: x }
        }
        LpOutcome::Separated { y } => MembershipCertificate::Outside { functional: y },
    };
    debug_assert!(cert.validate(frame, u), "invalid certificate {cert:?} for {u:?}");
    Ok((cert.is_inside(), cert))
}

/// Decides `u ∈ −pos(frame)`.
pub fn neg_member(frame: &ConeFrame, u: &IntVector) -> Result<(bool, MembershipCertificate), ConeError> {
    pos_member(frame, &u.neg())
}

pub fn is_member(frame: &ConeFrame, u: &IntVector) -> bool {
    pos_member(frame, u).map(|(b, _)| b).unwrap_or(false)
}

pub fn is_neg_member(frame: &ConeFrame, u: &IntVector) -> bool {
    neg_member(frame, u).map(|(b, _)| b).unwrap_or(false)
}

/// Zero is not in the positive span.
pub fn is_consistent(frame: &ConeFrame) -> bool {
    !is_member(frame, &IntVector::zero(frame.dim))
}

/// Integer frame of `pos(S)`: duplicates and `𝟏` dropped, then a subset of
/// `S` that still spans every input vector and is positively independent.
///
/// Membership is not transitive (a generator enters the span as `v − 𝟏`),
/// so removing one implied generator can strand another. Removals are
/// therefore searched depth-first in lexicographic order; the first path is
/// the plain greedy pass. If no independent spanning subset turns up within
/// `REDUCE_STATE_LIMIT` subsets, the greedy result is returned.
pub fn frame_reduce(dim: usize, set: &[IntVector]) -> Result<ConeFrame, ConeError> {
    let mut gens: Vec<IntVector> = set.iter().filter(|v| !v.is_one()).cloned().collect();
    for g in &gens {
        check_dim(dim, g)?;
    }
    gens.sort();
    gens.dedup();
    let mut search = ReduceSearch { dim, all: &gens, seen: HashSet::new(), greedy: None };
    let keep = match search.run(vec![true; gens.len()]) {
        Some(keep) => keep,
        None => search.greedy.take().unwrap_or_else(|| vec![true; gens.len()]),
    };
    Ok(search.frame(&keep))
}

const REDUCE_STATE_LIMIT: usize = 4096;

struct ReduceSearch<'a> {
    dim: usize,
    all: &'a [IntVector],
    seen: HashSet<Vec<bool>>,
    /// First dead end reached, i.e. the greedy pass's result.
    greedy: Option<Vec<bool>>,
}

impl ReduceSearch<'_> {
    fn frame(&self, keep: &[bool]) -> ConeFrame {
        let generators = self.all.iter().zip(keep).filter(|(_, k)| **k).map(|(v, _)| v.clone()).collect();
        ConeFrame { dim: self.dim, generators }
    }

    fn run(&mut self, keep: Vec<bool>) -> Option<Vec<bool>> {
        if self.seen.len() >= REDUCE_STATE_LIMIT || !self.seen.insert(keep.clone()) {
            return None;
        }
        let mut independent = true;
        for i in (0..keep.len()).filter(|&i| keep[i]) {
            let mut rest = keep.clone();
            rest[i] = false;
            let frame = self.frame(&rest);
            if !is_member(&frame, &self.all[i]) {
                continue;
            }
            independent = false;
            let spans = (0..keep.len()).filter(|&j| !keep[j]).all(|j| is_member(&frame, &self.all[j]));
            if spans {
                if let Some(found) = self.run(rest) {
                    return Some(found);
                }
            }
        }
        if independent {
            return Some(keep);
        }
        if self.greedy.is_none() {
            self.greedy = Some(keep);
        }
        None
    }
}

/// `frame_reduce(frame ∪ {u})`, or `frame` itself when `u` is already
/// implied. Fails if the result is inconsistent.
pub fn extend_frame(frame: &ConeFrame, u: &IntVector) -> Result<ConeFrame, ConeError> {
    check_dim(frame.dim, u)?;
    if is_member(frame, u) {
        return Ok(frame.clone());
    }
    let mut set = frame.generators.clone();
    set.push(u.clone());
    let out = frame_reduce(frame.dim, &set)?;
    if !is_consistent(&out) {
        return Err(ConeError::Inconsistent);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use proptest::prelude::*;

    fn iv(v: &[i64]) -> IntVector {
        IntVector(v.to_vec())
    }

    fn frame(dim: usize, gs: &[&[i64]]) -> ConeFrame {
        ConeFrame::from_generators(dim, gs.iter().map(|g| iv(g)).collect()).unwrap()
    }

    fn checked(f: &ConeFrame, u: &IntVector) -> (bool, MembershipCertificate) {
        let (b, c) = pos_member(f, u).unwrap();
        assert!(c.validate(f, u));
        (b, c)
    }

    #[test]
    fn membership_examples() {
        let (b, c) = checked(&ConeFrame::empty(3), &iv(&[2, 0, 0]));
        assert!(b);
        assert_eq!(c, MembershipCertificate::Inside { lambda0: Rational::from_integer(2.into()), lambdas: vec![] });

        let fx = frame(2, &[&[0, 1]]);
        let (b, c) = checked(&fx, &iv(&[1, 1]));
        assert!(b);
        assert_eq!(
            c,
            MembershipCertificate::Inside {
                lambda0: Rational::from_integer(2.into()),
                lambdas: vec![Rational::one()]
            }
        );
        assert!(!checked(&fx, &iv(&[-2, 1])).0);
    }

    #[test]
    fn negative_membership_examples() {
        let fx = frame(2, &[&[0, 1]]);
        assert!(neg_member(&fx, &iv(&[0, -1])).unwrap().0);
        assert!(neg_member(&ConeFrame::empty(3), &iv(&[-1, 0, 0])).unwrap().0);
        let (b, c) = neg_member(&fx, &iv(&[0, 1])).unwrap();
        assert!(!b);
        assert!(c.validate(&fx, &iv(&[0, -1])));
    }

    #[test]
    fn dimension_mismatch() {
        assert_eq!(
            pos_member(&ConeFrame::empty(3), &iv(&[1, 0])),
            Err(ConeError::DimensionMismatch { expected: 3, got: 2 })
        );
    }

    #[test]
    fn reduce_examples() {
        let x = iv(&[0, 1, 0]);
        let y = iv(&[0, 0, 1]);
        assert_eq!(frame_reduce(3, &[x.clone(), x.clone()]).unwrap().generators(), std::slice::from_ref(&x));
        assert_eq!(frame_reduce(3, &[x.clone(), iv(&[1, 1, 0])]).unwrap().generators(), std::slice::from_ref(&x));
        let both = frame_reduce(3, &[x.clone(), y.clone()]).unwrap();
        assert_eq!(both.len(), 2);
    }

    #[test]
    fn reduce_backtracks_past_a_stranding_removal() {
        // greedy drops (-1,3,1) first and then cannot drop (1,-1,1), which
        // lies in the span of the rest
        let set = [iv(&[0, 3, 0]), iv(&[-1, 3, 1]), iv(&[1, -1, 1]), iv(&[2, -2, 1])];
        let f = frame_reduce(3, &set).unwrap();
        assert_eq!(f.generators(), &[iv(&[-1, 3, 1]), iv(&[0, 3, 0]), iv(&[2, -2, 1])]);
        for (i, g) in f.generators().iter().enumerate() {
            assert!(!is_member(&f.without(i), g));
        }
        assert!(set.iter().all(|v| is_member(&f, v)));
    }

    #[test]
    fn extend_examples() {
        // variables (A, B) -> slots 1, 2
        let c = iv(&[0, 1, 0]);
        assert_eq!(extend_frame(&ConeFrame::empty(3), &c).unwrap().generators(), std::slice::from_ref(&c));

        let neg_a = iv(&[0, -1, 0]);
        let b = iv(&[0, 0, 1]);
        let f = frame(3, &[&neg_a.0, &b.0]);
        let out = extend_frame(&f, &iv(&[0, -1, 1])).unwrap();
        assert_eq!(out, f);

        // (A, n): {n} extended by -A-n+1
        let n = iv(&[0, 0, 1]);
        let f = frame(3, &[&n.0]);
        let out = extend_frame(&f, &iv(&[1, -1, -1])).unwrap();
        assert_eq!(out.len(), 2);
        assert!(is_consistent(&out));
    }

    #[test]
    fn inconsistent_extension_is_reported() {
        let f = frame(2, &[&[0, 1]]);
        assert_eq!(extend_frame(&f, &iv(&[0, -1])), Err(ConeError::Inconsistent));
    }

    fn arb_vec(dim: usize) -> impl Strategy<Value = IntVector> {
        proptest::collection::vec(-3i64..=3, dim)
            .prop_map(IntVector)
            .prop_filter("exclude 0 and 1", |v| !v.is_zero() && !v.is_one())
    }

    proptest! {
        #[test]
        fn certificates_validate(
            gens in proptest::collection::vec(arb_vec(4), 0..8),
            u in arb_vec(4)
        ) {
            let f = ConeFrame::from_generators(4, gens).unwrap();
            let (_, c) = pos_member(&f, &u).unwrap();
            prop_assert!(c.validate(&f, &u));
        }

        #[test]
        fn reduce_is_idempotent_and_spans(gens in proptest::collection::vec(arb_vec(3), 1..7)) {
            let f = frame_reduce(3, &gens).unwrap();
            prop_assert_eq!(frame_reduce(3, f.generators()).unwrap(), f.clone());
            for g in &gens {
                if !g.is_one() {
                    prop_assert!(is_member(&f, g));
                }
            }
            for (i, g) in f.generators().iter().enumerate() {
                prop_assert!(!is_member(&f.without(i), g));
            }
        }

        #[test]
        fn membership_absorbs_generator_steps(
            gens in proptest::collection::vec(arb_vec(3), 1..5),
            u in arb_vec(3)
        ) {
            let f = ConeFrame::from_generators(3, gens).unwrap();
            if is_member(&f, &u) {
                for g in f.generators() {
                    let shifted = IntVector(u.0.iter().zip(&g.minus_one().0).map(|(a, b)| a + b).collect());
                    prop_assert!(is_member(&f, &shifted));
                }
            }
        }
    }
}

mod common;

use common::*;
use proptest::prelude::*;
use qfinder_core::assembler::{BoundTerm, Mode, QBinomialIdentity};
use qfinder_core::cone::{ConeFrame, IntVector};
use qfinder_core::constraints::ConstraintNode;
use qfinder_core::expr::{AffineExpr, QuadExpr, VarTable};
use qfinder_core::poly::{gaussian_binomial, QPolynomial};
use qfinder_core::qalg::{QBinomial, SumCoefficient};
use qfinder_core::trace::{Orientation, ProofTrace};
use qfinder_core::verifier::{evaluate_lhs, evaluate_rhs, sample_assignments, verify, verify_at, VerifyError};

fn by_hand(
    vars: &VarTable,
    q_exp: QuadExpr,
    lhs: Vec<QBinomial>,
    rhs: Vec<QBinomial>,
    bounds: &[&str],
) -> QBinomialIdentity {
    QBinomialIdentity {
        vars: vars.clone(),
        coeff: SumCoefficient::q_power(q_exp),
        lhs_binomials: lhs,
        lhs_residuals: vec![],
        rhs_binomials: rhs,
        rhs_residuals: vec![],
        upper_bound: bounds.iter().map(|b| BoundTerm { expr: aff(vars, b), divisor: 1 }).collect(),
        constraint: ConstraintNode::root(vars),
        trace: ProofTrace::default(),
    }
}

fn vandermonde() -> QBinomialIdentity {
    let v = VarTable::new(&["m", "n", "k"], "r").unwrap();
    by_hand(
        &v,
        QuadExpr::product(&aff(&v, "r"), &aff(&v, "m-k+r")),
        vec![binom(&v, "m", "k-r", 1), binom(&v, "n", "r", 1)],
        vec![binom(&v, "m+n", "k", 1)],
        &["n", "k"],
    )
}

fn grid_points(vars: &VarTable, names: &[&str], max: i64) -> Vec<qfinder_core::expr::Assignment> {
    let mut out = vec![vec![]];
    for _ in names {
        out = out.into_iter().flat_map(|p: Vec<i64>| (0..=max).map(move |x| [p.clone(), vec![x]].concat())).collect();
    }
    out.iter()
        .map(|p| assignment(vars, &names.iter().copied().zip(p.iter().copied()).collect::<Vec<_>>()))
        .collect()
}

#[test]
fn oracle_matches_small_tables() {
    assert_eq!(gauss(2, 1, 2), Oracle::one().add(&q_pow(2)));
    assert_eq!(gauss(3, -1, 1), Oracle::zero());
    assert_eq!(gauss(5, 0, 1), Oracle::one());
    assert_eq!(gauss(4, 2, 1), sum([0, 1, 2, 2, 3, 4].map(q_pow)));
}

#[test]
fn pascal_expansion_matches_the_product_formula() {
    for step in 1..=3u32 {
        for n in 0..=12 {
            for k in 0..=n {
                assert_eq!(Oracle::from_poly(&gaussian_binomial(n, k, step)), gauss(n, k, step as i64), "{n} {k} {step}");
            }
        }
    }
}

#[test]
fn vandermonde_smallest_point() {
    let id = vandermonde();
    let at = assignment(&id.vars, &[("m", 1), ("n", 1), ("k", 1)]);
    let one_plus_q = QPolynomial::from_i64s(0, &[1, 1]);
    assert_eq!(evaluate_lhs(&id, &at).unwrap(), one_plus_q);
    assert_eq!(evaluate_rhs(&id, &at).unwrap(), one_plus_q);
}

#[test]
fn vandermonde_holds_on_the_grid() {
    let id = vandermonde();
    let report = verify_at(&id, &grid_points(&id.vars, &["m", "n", "k"], 5));
    assert!(report.passed(), "{:?}", report.mismatches.first());
    assert_eq!(report.checked, 216);
}

#[test]
fn saalschutz_form_at_a_small_point() {
    let v = VarTable::new(&["a", "b", "x", "y"], "r").unwrap();
    let id = by_hand(
        &v,
        QuadExpr::product(&aff(&v, "a-r"), &aff(&v, "b-r")),
        vec![binom(&v, "x+y+r", "r", 1), binom(&v, "x+a-b", "a-r", 1), binom(&v, "y+b-a", "b-r", 1)],
        vec![binom(&v, "x+a", "a", 1), binom(&v, "y+b", "b", 1)],
        &["a", "b"],
    );
    let at = assignment(&v, &[("a", 1), ("b", 1), ("x", 0), ("y", 0)]);
    assert_eq!(evaluate_lhs(&id, &at).unwrap(), QPolynomial::one());
    assert_eq!(evaluate_rhs(&id, &at).unwrap(), QPolynomial::one());
    // where a binomial top goes negative the printed form fails
    let at = assignment(&v, &[("a", 1), ("b", 0), ("x", 0), ("y", 0)]);
    assert_ne!(evaluate_lhs(&id, &at).unwrap(), evaluate_rhs(&id, &at).unwrap());
}

#[test]
fn suranyi_holds_on_the_grid() {
    let v = VarTable::new(&["k", "n", "x"], "r").unwrap();
    let id = by_hand(
        &v,
        QuadExpr::product(&aff(&v, "r"), &aff(&v, "r")),
        vec![binom(&v, "k", "r", 1), binom(&v, "n", "r", 1), binom(&v, "x+k+n-r", "k+n", 1)],
        vec![binom(&v, "x+k", "k", 1), binom(&v, "x+n", "n", 1)],
        &["k", "n", "x+k+n"],
    );
    assert!(verify_at(&id, &grid_points(&v, &["k", "n", "x"], 5)).passed());
}

fn printed_kummer(v: &VarTable) -> QBinomialIdentity {
    let mut id = by_hand(
        v,
        QuadExpr::binom2(&aff(v, "r+1")),
        vec![binom(v, "2m+r-1", "r", 1), binom(v, "2m+2n", "n-r", 1), binom(v, "m+n", "n", 2)],
        vec![binom(v, "2m+2n", "2n+1", 1), binom(v, "2n+1", "n", 1)],
        &["n"],
    );
    id.rhs_residuals = vec![residual(v, "n+1", 1, Orientation::Numerator)];
    id
}

#[test]
fn kummer_display_fails_where_its_summand_is_corrected() {
    let v = VarTable::new(&["m", "n"], "r").unwrap();
    let printed = printed_kummer(&v);
    let at = assignment(&v, &[("m", 1), ("n", 1)]);
    assert_eq!(Oracle::from_poly(&gaussian_binomial(2, 1, 2)), Oracle::one().add(&q_pow(2)));
    assert_ne!(evaluate_lhs(&printed, &at).unwrap(), evaluate_rhs(&printed, &at).unwrap());
    // dividing the q^2 binomial by (1-q^{2m}) and multiplying by (1-q^2)
    // gives the identity the derivation actually produces
    let mut fixed = printed.clone();
    fixed.lhs_binomials[2] = binom(&v, "m+n", "n+1", 2);
    fixed.lhs_binomials.push(binom(&v, "n+1", "1", 2));
    fixed.rhs_residuals.push(residual(&v, "1", 2, Orientation::Denominator));
    let report = verify_at(&fixed, &grid_points(&v, &["m", "n"], 4).into_iter().filter(|a| a.values().all(|x| *x >= 1)).collect::<Vec<_>>());
    assert!(report.passed(), "{:?}", report.mismatches.first());
}

#[test]
fn terminating_region_sample_includes_the_corner() {
    let r = derive("pfaff_saalschutz", Mode::Basic);
    let v = r.identities[0].identity.vars.clone();
    let cond = ["-A", "B", "C", "N", "A+B-C-N+1"];
    let id = r
        .identities
        .iter()
        .map(|x| &x.identity)
        .find(|id| cond.iter().all(|e| id.constraint.implies_positive(&aff(&v, e))))
        .unwrap();
    let all = sample_assignments(&v, &id.constraint, usize::MAX, 6, 0).unwrap();
    let corner = assignment(&v, &[("A", -1), ("B", 3), ("C", 1), ("N", 1)]);
    assert!(all.contains(&corner));
}

#[test]
fn sampling_edge_cases() {
    let v = VarTable::new(&["A"], "n").unwrap();
    let root = ConstraintNode::root(&v);
    assert_eq!(sample_assignments(&v, &root, 100, 2, 0).unwrap().len(), 5);
    assert_eq!(sample_assignments(&v, &root, 3, 2, 0).unwrap(), sample_assignments(&v, &root, 3, 2, 0).unwrap());
    assert_eq!(sample_assignments(&v, &root, 3, 0, 0), Err(VerifyError::BadBound));
    // A >= 1 and -A >= 1
    let frame = ConeFrame::from_generators(v.dim(), vec![IntVector(vec![0, 1, 0]), IntVector(vec![0, -1, 0])]).unwrap();
    let node = ConstraintNode { frame, history: vec![] };
    assert_eq!(sample_assignments(&v, &node, 10, 6, 0), Err(VerifyError::EmptyDomain(6)));
}

#[test]
fn corrupted_exponent_reports_the_difference() {
    let mut id = derive("qgauss", Mode::Basic).identities.remove(0).identity;
    id.coeff.q_exp = &id.coeff.q_exp + &QuadExpr::constant(1);
    let report = verify(&id, 20, 6, 0);
    assert!(!report.passed());
    let m = &report.mismatches[0];
    assert!(!m.difference().is_zero());
}

#[test]
fn dropped_bound_term_is_flagged_or_fails() {
    for x in derive("pfaff_saalschutz", Mode::Basic).identities {
        if x.identity.upper_bound.len() < 2 {
            continue;
        }
        for i in 0..x.identity.upper_bound.len() {
            let mut id = x.identity.clone();
            id.upper_bound.remove(i);
            let report = verify(&id, 20, 6, 0);
            if report.passed() {
                // the remaining limits already stop every live term
                continue;
            }
            assert!(!report.mismatches.is_empty() || !report.errors.is_empty());
        }
        let mut id = x.identity.clone();
        // cutting the sum short leaves live terms past the limit
        id.upper_bound = vec![BoundTerm { expr: AffineExpr::constant(0), divisor: 1 }];
        let report = verify(&id, 20, 6, 0);
        assert!(!report.passed() || !report.bound_tight());
    }
}

#[test]
fn unbounded_and_inexact_cases_are_errors() {
    let mut id = vandermonde();
    id.upper_bound.clear();
    let at = assignment(&id.vars, &[("m", 1), ("n", 1), ("k", 1)]);
    assert_eq!(evaluate_lhs(&id, &at), Err(VerifyError::Unbounded));
    let mut id = vandermonde();
    id.rhs_residuals.push(residual(&id.vars, "2", 1, Orientation::Denominator));
    assert!(matches!(evaluate_rhs(&id, &at), Err(VerifyError::InexactDivision(2))));
}

proptest! {
    #[test]
    fn division_round_trips(a in proptest::collection::vec(-5i64..5, 1..6), off in -3i64..3, e in 1i64..5) {
        let p = QPolynomial::from_i64s(off, &a);
        let d = QPolynomial::one_minus_q_pow(e);
        prop_assert_eq!((&p * &d).div_exact(&d), Some(p));
    }

    #[test]
    fn verification_is_seed_independent_for_true_identities(seed in 0u64..1000) {
        let id = vandermonde();
        let mut id = id;
        id.constraint = ConstraintNode::root(&id.vars);
        // restrict to the natural domain via explicit points
        let pts: Vec<_> = sample_assignments(&id.vars, &id.constraint, 10, 4, seed)
            .unwrap()
            .into_iter()
            .filter(|a| a.values().all(|x| *x >= 0))
            .collect();
        prop_assert!(verify_at(&id, &pts).mismatches.is_empty());
    }
}

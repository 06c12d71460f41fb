//! One PASS/FAIL line per acceptance criterion.
//!
//! Criteria listed in `EXPECTED_FAIL` are ones whose target statement does
//! not hold mathematically; they are still evaluated in full and reported
//! as FAIL. The run fails if any criterion's outcome differs from its
//! expectation, so an unexpected pass is reported too.

mod common;

use std::collections::BTreeMap;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use qfinder_core::assembler::{Mode, QBinomialIdentity};
use qfinder_core::cone::{frame_reduce, is_consistent, is_member, pos_member, ConeFrame, IntVector};
use qfinder_core::constraints::enumerate_regimes;
use qfinder_core::expr::{AffineExpr, QuadExpr, VarId, VarTable};
use qfinder_core::frontend::{emit, parse, OutputFormat, RunConfig, RunResult};
use qfinder_core::trace::Orientation;
use qfinder_core::verifier::{evaluate_lhs, evaluate_rhs, verify};

/// Criteria whose statement is false as printed; see the README.
const EXPECTED_FAIL: &[u32] = &[4, 5, 6];

const SAMPLES: usize = 20;
const BOUND: i64 = 6;
const GAUSS_TIME_LIMIT: Duration = Duration::from_secs(10);
const PFAFF_TIME_LIMIT: Duration = Duration::from_secs(60);
const CONE_QUERIES: usize = 500;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn config(mode: Mode) -> RunConfig {
    RunConfig { mode, samples: SAMPLES, bound: BOUND, ..RunConfig::default() }
}

fn all_verified(r: &RunResult) -> bool {
    r.identities.iter().all(|v| v.report.passed() && v.report.checked >= SAMPLES)
}

fn q_product(vars: &VarTable, a: &str, b: &str) -> QuadExpr {
    QuadExpr::product(&aff(vars, a), &aff(vars, b))
}

// ---------------------------------------------------------------------------
// Pfaff–Saalschütz shapes

fn terminating_form(vars: &VarTable, lhs: [(&str, &str); 3], rhs: [(&str, &str); 2]) -> Shape {
    Shape {
        q_exp: q_product(vars, "r+A", "r-N"),
        lhs: lhs.iter().map(|(t, b)| binom(vars, t, b, 1)).collect(),
        rhs: rhs.iter().map(|(t, b)| binom(vars, t, b, 1)).collect(),
        rhs_residuals: vec![],
        bounds: Some(vec![aff(vars, "-A"), aff(vars, "N")]),
    }
}

fn terminating_shapes(v: &VarTable) -> Vec<Shape> {
    vec![
        terminating_form(v, [("B+r-1", "B-C"), ("N", "r"), ("B-C-N", "-A-r")], [("-A+C+N-1", "-A"), ("B-1", "A+B-C")]),
        terminating_form(v, [("B+r-1", "B-C"), ("-A", "r"), ("A+B-C", "N-r")], [("-A+C+N-1", "N"), ("B-1", "C+N-1")]),
        terminating_form(v, [("B+r-1", "r"), ("C+N-1", "N-r"), ("B-C-N", "-A-r")], [("-A+C+N-1", "N"), ("B-C", "-A")]),
        terminating_form(v, [("B+r-1", "r"), ("-A+C-1", "-A-r"), ("A+B-C", "N-r")], [("-A+C+N-1", "-A"), ("B-C", "N")]),
        terminating_form(
            v,
            [("B+r-1", "-A+C+N-1"), ("C+N-1", "N-r"), ("-A", "r")],
            [("B-C", "N"), ("B-1", "A+B-C")],
        ),
        terminating_form(
            v,
            [("B+r-1", "-A+C+N-1"), ("-A+C-1", "-A-r"), ("N", "r")],
            [("B-1", "C+N-1"), ("B-C", "-A")],
        ),
    ]
}

/// `A -> -N`, `N -> -A`: the interchange of `-A` and `N`.
fn swap_a_n(v: &VarTable) -> BTreeMap<VarId, AffineExpr> {
    substitution(v, &[("A", aff(v, "-N")), ("N", aff(v, "-A"))])
}

/// An emitted identity matching `shape`, and whether it matched through the
/// `-A <-> N` interchange.
fn find_match<'a>(ids: &'a [QBinomialIdentity], shape: &Shape) -> Option<(&'a QBinomialIdentity, bool)> {
    if let Some(id) = ids.iter().find(|id| shape.matches(id)) {
        return Some((id, false));
    }
    let v = &ids.first()?.vars;
    let swapped = shape.substitute(&swap_a_n(v));
    ids.iter().find(|id| swapped.matches(id)).map(|id| (id, true))
}

/// Values for the emitted identity that reproduce the printed identity at
/// `(A, B, C, N)`.
fn pfaff_point(vars: &VarTable, abcn: [i64; 4], swapped: bool) -> qfinder_core::expr::Assignment {
    let [a, b, c, n] = abcn;
    let (a, n) = if swapped { (-n, -a) } else { (a, n) };
    assignment(vars, &[("A", a), ("B", b), ("C", c), ("N", n)])
}

fn in_terminating_region([a, b, c, n]: [i64; 4]) -> bool {
    -a >= 1 && b >= 1 && c >= 1 && n >= 1 && a + b - c - n + 1 >= 1
}

fn emitted_sides(id: &QBinomialIdentity, at: &qfinder_core::expr::Assignment) -> Option<(Oracle, Oracle)> {
    Some((Oracle::from_poly(&evaluate_lhs(id, at).ok()?), Oracle::from_poly(&evaluate_rhs(id, at).ok()?)))
}

fn grid(dims: usize, max: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..dims {
        out = out.into_iter().flat_map(|p| (0..=max).map(move |x| [p.clone(), vec![x]].concat())).collect();
    }
    out
}

// ---------------------------------------------------------------------------
// Independent closed forms

fn g(n: i64, k: i64) -> Oracle {
    gauss(n, k, 1)
}

fn gould_saalschutz(a: i64, b: i64, x: i64, y: i64) -> (Oracle, Oracle) {
    let lhs = sum((0..=a.min(b)).map(|r| {
        product([q_pow((a - r) * (b - r)), g(x + y + r, r), g(x + a - b, a - r), g(y + b - a, b - r)])
    }));
    (lhs, g(x + a, a).mul(&g(y + b, b)))
}

fn suranyi(k: i64, n: i64, x: i64) -> (Oracle, Oracle) {
    let m = k.min(n).min(x + k + n);
    let lhs = sum((0..=m).map(|r| product([q_pow(r * r), g(k, r), g(n, r), g(x + k + n - r, k + n)])));
    (lhs, g(x + k, k).mul(&g(x + n, n)))
}

fn kummer_binomial(m: i64, n: i64) -> (Oracle, Oracle) {
    let lhs = sum((0..=n).map(|r| {
        product([q_pow(r * (r + 1) / 2), g(2 * m + r - 1, r), g(2 * m + 2 * n, n - r), gauss(m + n, n, 2)])
    }));
    let rhs = product([Oracle::one_minus(n + 1), g(2 * m + 2 * n, 2 * n + 1), g(2 * n + 1, n)]);
    (lhs, rhs)
}

const TERMS: i64 = 16;

struct TableRow {
    name: &'static str,
    result: usize,
    params: usize,
    abcn: fn(&[i64]) -> [i64; 4],
    closed: fn(&[i64]) -> (Oracle, Oracle),
}

fn table_rows() -> Vec<TableRow> {
    vec![
        TableRow {
            name: "Gould (first row)",
            result: 1,
            params: 1,
            abcn: |p| [-p[0], 3 * p[0] + 1, p[0] + 1, p[0]],
            closed: |p| {
                let n = p[0];
                let lhs = sum((0..=TERMS).map(|k| product([q_pow((k - n) * (k - n)), g(n, k), g(n, k), g(3 * n + k, 2 * n)])));
                (lhs, g(3 * n, n).mul(&g(3 * n, n)))
            },
        },
        TableRow {
            name: "Takacs",
            result: 2,
            params: 4,
            abcn: |p| {
                let [r, t, m, s] = [p[0], p[1], p[2], p[3]];
                [-r, t + 1, t - m + 1, s]
            },
            closed: |p| {
                let [r, t, m, s] = [p[0], p[1], p[2], p[3]];
                let lhs = sum((0..=TERMS).map(|j| product([q_pow((j - s) * (j - r)), g(r, j), g(m - r, s - j), g(t + j, m)])));
                (lhs, g(t, m - s).mul(&g(t - m + s + r, s)))
            },
        },
        TableRow {
            name: "Gould (Saalschutz form)",
            result: 3,
            params: 4,
            abcn: |p| {
                let [a, b, x, y] = [p[0], p[1], p[2], p[3]];
                [-a, x + y + 1, -a + y + 1, b]
            },
            closed: |p| gould_saalschutz(p[0], p[1], p[2], p[3]),
        },
        TableRow {
            name: "Stanley",
            result: 4,
            params: 4,
            abcn: |p| {
                let [a, b, x, y] = [p[0], p[1], p[2], p[3]];
                [-a, x + y + 1, y - a + 1, b]
            },
            closed: |p| {
                let [a, b, x, y] = [p[0], p[1], p[2], p[3]];
                let lhs = sum((0..=TERMS).map(|k| product([q_pow((a - k) * (b - k)), g(x + y + k, k), g(y, a - k), g(x, b - k)])));
                (lhs, g(x + a, b).mul(&g(y + b, a)))
            },
        },
        TableRow {
            name: "Andrews",
            result: 5,
            params: 4,
            abcn: |p| {
                let [m, big_m, n, big_n] = [p[0], p[1], p[2], p[3]];
                [m - big_m, m + n + 1, m + 1, big_n]
            },
            closed: |p| {
                let [m, big_m, n, big_n] = [p[0], p[1], p[2], p[3]];
                let lhs = sum((0..=TERMS).map(|r| {
                    product([q_pow((big_n - r) * (big_m - r - m)), g(big_m - m, r), g(big_n + m, m + r), g(m + n + r, big_m + big_n)])
                }));
                (lhs, g(m + n, big_m).mul(&g(n, big_n)))
            },
        },
        TableRow {
            name: "Gould (second row)",
            result: 6,
            params: 3,
            abcn: |p| {
                let [r, x, n] = [p[0], p[1], p[2]];
                [-r, x + n + r + 1, 1, n]
            },
            closed: |p| {
                let [r, x, n] = [p[0], p[1], p[2]];
                let lhs = sum((0..=TERMS).map(|k| product([q_pow((k - n) * (k - r)), g(n, k), g(r, k), g(x + n + r + k, n + r)])));
                (lhs, g(x + n + r, n).mul(&g(x + n + r, r)))
            },
        },
        TableRow {
            name: "Bizley (first row)",
            result: 6,
            params: 4,
            abcn: |p| {
                let [a, b, c, d] = [p[0], p[1], p[2], p[3]];
                [-c - d, a + 1, 1 - d, b]
            },
            closed: |p| {
                let [a, b, c, d] = [p[0], p[1], p[2], p[3]];
                let lhs = sum((0..=TERMS).map(|k| product([q_pow((b - k) * (c + d - k)), g(b, k), g(c, k - d), g(a + k, b + c)])));
                (lhs, g(a, b - d).mul(&g(a + d, c + d)))
            },
        },
        TableRow {
            name: "Bizley (second row)",
            result: 6,
            params: 4,
            abcn: |p| {
                let [a, b, c, d] = [p[0], p[1], p[2], p[3]];
                [-d, a + 1, 1 + c - d, b]
            },
            closed: |p| {
                let [a, b, c, d] = [p[0], p[1], p[2], p[3]];
                let lhs = sum((0..=TERMS).map(|k| product([q_pow((b - k) * (d - k)), g(b, k), g(c, d - k), g(a + k, b + c)])));
                (lhs, g(a, b + c - d).mul(&g(a - c + d, d)))
            },
        },
    ]
}

// ---------------------------------------------------------------------------
// Criteria

fn criterion_1() -> Outcome {
    let (r, t) = derive_with("qgauss", &config(Mode::Basic));
    let Some(v) = r.identities.first().map(|v| v.identity.vars.clone()) else {
        return outcome(false, "no identities");
    };
    let shape = Shape {
        q_exp: q_product(&v, "n", "C+n-1"),
        lhs: vec![binom(&v, "-A", "n", 1), binom(&v, "-B+C-1", "-B-n", 1)],
        rhs: vec![binom(&v, "-A-B+C-1", "-B", 1)],
        rhs_residuals: vec![],
        bounds: None,
    };
    let regime = ["-A-n+1", "-B-n+1", "C"];
    let hit = r.identities.iter().find(|x| {
        shape.matches(&x.identity) && regime.iter().all(|e| x.identity.constraint.implies_positive(&aff(&v, e)))
    });
    match hit {
        Some(x) => outcome(
            x.report.passed() && x.report.checked >= SAMPLES && t < GAUSS_TIME_LIMIT,
            format!(
                "matched `{}`; verified on {} assignments (bound {BOUND}); runtime {:.2?}",
                x.identity.display(),
                x.report.checked,
                t
            ),
        ),
        None => outcome(false, format!("no identity matches the q-Gauss display ({} emitted)", r.identities.len())),
    }
}

fn criterion_2() -> Outcome {
    let (r, t) = derive_with("pfaff_saalschutz", &config(Mode::Basic));
    let ids: Vec<QBinomialIdentity> = r.identities.iter().map(|v| v.identity.clone()).collect();
    let v = ids[0].vars.clone();
    let cond = ["-A", "B", "C", "N", "A+B-C-N+1"];
    let under: Vec<QBinomialIdentity> = ids
        .iter()
        .filter(|id| cond.iter().all(|e| id.constraint.implies_positive(&aff(&v, e))))
        .cloned()
        .collect();
    let mut matched = Vec::new();
    let mut notes = Vec::new();
    for (k, shape) in terminating_shapes(&v).iter().enumerate() {
        match find_match(&under, shape) {
            Some((id, swapped)) => {
                notes.push(format!("form {}{}", k + 1, if swapped { "(swapped)" } else { "" }));
                matched.push(id.clone());
            }
            None => notes.push(format!("form {} missing", k + 1)),
        }
    }
    let distinct = {
        let mut nf: Vec<_> = matched.iter().map(|m| m.normal_form()).collect();
        nf.sort();
        nf.dedup();
        nf.len()
    };
    let verified = r
        .identities
        .iter()
        .filter(|x| matched.iter().any(|m| m == &x.identity))
        .all(|x| x.report.passed() && x.report.checked >= SAMPLES);
    let pass = under.len() >= 6 && matched.len() == 6 && distinct == 6 && verified && t < PFAFF_TIME_LIMIT;
    outcome(
        pass,
        format!(
            "{} identities in the terminating region; {}; all verified: {verified}; runtime {:.2?}",
            under.len(),
            notes.join(", "),
            t
        ),
    )
}

fn criterion_3() -> Outcome {
    let r = derive("pfaff_saalschutz", Mode::Basic);
    let ids: Vec<QBinomialIdentity> = r.identities.iter().map(|v| v.identity.clone()).collect();
    let v = ids[0].vars.clone();
    let shape = Shape {
        q_exp: q_product(&v, "r", "C+r-1"),
        lhs: vec![binom(&v, "-A-B+C+N-r-1", "N-r", 1), binom(&v, "-B+C-1", "-B-r", 1), binom(&v, "-A", "r", 1)],
        rhs: vec![binom(&v, "-A+C+N-1", "N", 1), binom(&v, "-B+C+N-1", "-B", 1)],
        rhs_residuals: vec![],
        bounds: Some(vec![aff(&v, "-A"), aff(&v, "-B"), aff(&v, "N"), aff(&v, "-A-B+C+N-1")]),
    };
    let Some(id) = ids.iter().find(|id| shape.matches(id)) else {
        return outcome(false, "mixed-sign form not among the outputs");
    };
    let mut bad = Vec::new();
    for p in grid(3, 4) {
        let (k, n, x) = (p[0], p[1], p[2]);
        let at = assignment(&v, &[("A", -k), ("B", -n), ("C", 1), ("N", x)]);
        let (want_l, want_r) = suranyi(k, n, x);
        match emitted_sides(id, &at) {
            Some((l, rr)) if l == rr && l == want_l && rr == want_r => {}
            _ => bad.push(format!("(k,n,x)=({k},{n},{x})")),
        }
    }
    outcome(
        bad.is_empty(),
        format!("mixed-sign form found; Suranyi specialization exact at {}/125 points {}", 125 - bad.len(), bad.join(" ")),
    )
}

fn criterion_4() -> Outcome {
    let r = derive("pfaff_saalschutz", Mode::Basic);
    let ids: Vec<QBinomialIdentity> = r.identities.iter().map(|v| v.identity.clone()).collect();
    let v = ids[0].vars.clone();
    let Some((id, swapped)) = find_match(&ids, &terminating_shapes(&v)[2]) else {
        return outcome(false, "no output matches form 3");
    };
    let mut failures = 0;
    let mut natural = 0;
    let mut natural_ok = 0;
    let mut failures_outside = 0;
    for p in grid(4, 3) {
        let (a, b, x, y) = (p[0], p[1], p[2], p[3]);
        let at = pfaff_point(&v, [-a, x + y + 1, -a + y + 1, b], swapped);
        let (want_l, want_r) = gould_saalschutz(a, b, x, y);
        let ok = matches!(emitted_sides(id, &at), Some((l, rr)) if l == rr && l == want_l && rr == want_r);
        // every binomial top of the substituted identity is nonnegative
        let tops_ok = x + y >= 0 && x + a - b >= 0 && y + b - a >= 0;
        if tops_ok {
            natural += 1;
            natural_ok += ok as usize;
        }
        if !ok {
            failures += 1;
            failures_outside += (!tops_ok) as usize;
        }
    }
    outcome(
        failures == 0,
        format!(
            "form 3 match{}; exact at {}/256 grid points; failures with a negative binomial top: \
             {failures_outside}/{failures}; exact at {natural_ok}/{natural} points with nonnegative tops",
            if swapped { " (swapped)" } else { "" },
            256 - failures
        ),
    )
}

fn criterion_5() -> Outcome {
    let r = derive("pfaff_saalschutz", Mode::Basic);
    let ids: Vec<QBinomialIdentity> = r.identities.iter().map(|v| v.identity.clone()).collect();
    let v = ids[0].vars.clone();
    let shapes = terminating_shapes(&v);
    let mut passing = Vec::new();
    let mut notes = Vec::new();
    for row in table_rows() {
        let Some((id, swapped)) = find_match(&ids, &shapes[row.result - 1]) else {
            notes.push(format!("{}: no form {} output", row.name, row.result));
            continue;
        };
        let points = grid(row.params, 4);
        let mut fails = 0;
        let mut inside = 0;
        let mut inside_fails = 0;
        for p in &points {
            let abcn = (row.abcn)(p);
            let (want_l, want_r) = (row.closed)(p);
            let ok = want_l == want_r
                && matches!(emitted_sides(id, &pfaff_point(&v, abcn, swapped)), Some((l, rr)) if l == want_l && rr == want_r);
            fails += (!ok) as usize;
            if in_terminating_region(abcn) {
                inside += 1;
                inside_fails += (!ok) as usize;
            }
        }
        if fails == 0 {
            passing.push(row.name);
        }
        notes.push(format!(
            "{}: {}/{} ({}/{} inside the terminating region)",
            row.name,
            points.len() - fails,
            points.len(),
            inside - inside_fails,
            inside
        ));
    }
    let pass = passing.len() >= 3 && passing.contains(&"Gould (first row)") && passing.contains(&"Takacs");
    outcome(pass, format!("rows exact on the full 0..4 grid: [{}]; {}", passing.join(", "), notes.join("; ")))
}

fn criterion_6() -> Outcome {
    let r = derive("bailey_daum", Mode::Plus);
    let Some(v) = r.identities.first().map(|x| x.identity.vars.clone()) else {
        return outcome(false, "no identities in plus mode");
    };
    let shape = Shape {
        q_exp: QuadExpr::binom2(&aff(&v, "r+1")),
        lhs: vec![binom(&v, "2A+r-1", "r", 1), binom(&v, "2A-2B", "-B-r", 1), binom(&v, "A-B", "-B", 2)],
        rhs: vec![binom(&v, "2A-2B", "-2B+1", 1), binom(&v, "-2B+1", "-B", 1)],
        rhs_residuals: vec![residual(&v, "-B+1", 1, Orientation::Numerator)],
        bounds: Some(vec![aff(&v, "-B")]),
    };
    let found = r.identities.iter().any(|x| shape.matches(&x.identity));
    let mut holds = 0;
    for m in 1..=4 {
        for n in 1..=4 {
            let (l, rr) = kummer_binomial(m, n);
            holds += (l == rr) as usize;
        }
    }
    let mut emitted_ok = 0;
    let mut emitted_total = 0;
    for x in &r.identities {
        for m in 1..=4 {
            for n in 1..=4 {
                emitted_total += 1;
                let at = assignment(&v, &[("A", m), ("B", -n)]);
                emitted_ok += matches!(emitted_sides(&x.identity, &at), Some((l, rr)) if l == rr) as usize;
            }
        }
    }
    outcome(
        found && holds == 16,
        format!(
            "printed closed form among outputs: {found}; printed closed form holds at {holds}/16 points with 1<=m,n<=4; \
             {} plus-mode identities emitted, all verified: {}, exact at {emitted_ok}/{emitted_total} (m,n) points",
            r.identities.len(),
            all_verified(&r)
        ),
    )
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> IntVector {
    IntVector((0..dim).map(|_| rng.random_range(-3..=3)).collect())
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bad_certs = 0;
    let mut bad_frames = 0;
    let mut reduced = 0;
    for _ in 0..CONE_QUERIES {
        let dim = rng.random_range(1..=6);
        let count = rng.random_range(0..=12);
        let set: Vec<IntVector> = (0..count).map(|_| random_vector(&mut rng, dim)).collect();
        let frame = ConeFrame::from_generators(dim, set.clone()).unwrap();
        let u = random_vector(&mut rng, dim);
        let (_, cert) = pos_member(&frame, &u).unwrap();
        bad_certs += (!cert.validate(&frame, &u)) as usize;
        if !is_consistent(&frame) {
            continue;
        }
        reduced += 1;
        let f = frame_reduce(dim, &set).unwrap();
        let spans = set.iter().all(|s| is_member(&f, s)) && f.generators().iter().all(|g| is_member(&frame, g));
        let independent = (0..f.len()).all(|i| {
            let rest: Vec<IntVector> =
                f.generators().iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| g.clone()).collect();
            !is_member(&ConeFrame::from_generators(dim, rest).unwrap(), &f.generators()[i])
        });
        bad_frames += (!(spans && independent)) as usize;
    }
    let mut leaves = 0;
    let mut bad_leaves = 0;
    for name in ["qgauss", "pfaff_saalschutz", "bailey_daum"] {
        let id = parse(&input_text(name)).unwrap().to_identity().unwrap();
        for r in enumerate_regimes(&id, 1_000_000).regimes {
            leaves += 1;
            bad_leaves += (!is_consistent(&r.node.frame)) as usize;
        }
    }
    outcome(
        bad_certs == 0 && bad_frames == 0 && bad_leaves == 0,
        format!(
            "{CONE_QUERIES} membership certificates, {bad_certs} invalid; {reduced} reduced frames, {bad_frames} \
             not span-preserving or not positively independent; {leaves} constraint-tree leaves, {bad_leaves} with 0 in pos(F)"
        ),
    )
}

/// Every q-exponent and binomial-index corruption, minus index changes that
/// only swap a binomial for its mirror image.
fn mutants(id: &QBinomialIdentity) -> Vec<(String, QBinomialIdentity)> {
    let mut out = Vec::new();
    let mut m = id.clone();
    m.coeff.q_exp = &m.coeff.q_exp + &QuadExpr::constant(1);
    out.push(("q-exponent +1".to_string(), m));
    for side in 0..2 {
        let n = if side == 0 { id.lhs_binomials.len() } else { id.rhs_binomials.len() };
        for i in 0..n {
            for (which, delta) in [("top", 1), ("top", -1), ("bottom", 1), ("bottom", -1)] {
                let mut m = id.clone();
                let b = if side == 0 { &mut m.lhs_binomials[i] } else { &mut m.rhs_binomials[i] };
                let before = b.canonical();
                if which == "top" {
                    b.top = &b.top + delta;
                } else {
                    b.bottom = &b.bottom + delta;
                }
                // binom(2k+1, k) -> binom(2k+1, k+1) is the same polynomial
                if b.canonical() == before {
                    continue;
                }
                out.push((format!("{} binomial {i} {which} {delta:+}", if side == 0 { "sum" } else { "product" }), m));
            }
        }
    }
    out
}

fn criterion_8() -> Outcome {
    let mut total = 0;
    let mut mirrored = 0;
    let mut survivors = Vec::new();
    for (name, mode) in [("qgauss", Mode::Basic), ("pfaff_saalschutz", Mode::Basic), ("bailey_daum", Mode::Plus)] {
        for x in derive(name, mode).identities {
            let ms = mutants(&x.identity);
            mirrored += 1 + 4 * (x.identity.lhs_binomials.len() + x.identity.rhs_binomials.len()) - ms.len();
            for (what, m) in ms {
                total += 1;
                if verify(&m, SAMPLES, BOUND, 0).passed() {
                    survivors.push(format!("{what} of `{}`", x.identity.display()));
                }
            }
        }
    }
    outcome(
        survivors.is_empty(),
        format!(
            "{total} mutants, {} survived verification {}; {mirrored} index changes skipped as mirror images",
            survivors.len(),
            survivors.join("; ")
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, mode) in [("qgauss", Mode::Basic), ("pfaff_saalschutz", Mode::Basic), ("bailey_daum", Mode::Plus)] {
        let cfg = RunConfig { format: OutputFormat::Records, trace: true, ..config(mode) };
        let first = emit(&derive_with(name, &cfg).0, &cfg);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let second = pool.install(|| emit(&derive_with(name, &cfg).0, &cfg));
        let same = first == second;
        pass &= same && !first.is_empty();
        notes.push(format!("{name}: {} bytes, identical: {same}", first.len()));
    }
    outcome(pass, notes.join("; "))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "q-Gauss reproduction", criterion_1),
        (2, "terminating-region outputs", criterion_2),
        (3, "mixed-sign region and Suranyi", criterion_3),
        (4, "Saalschutz specialization", criterion_4),
        (5, "classic identity rows", criterion_5),
        (6, "Bailey-Daum plus mode", criterion_6),
        (7, "cone kernel properties", criterion_7),
        (8, "mutation sensitivity", criterion_8),
        (9, "determinism", criterion_9),
    ];
    let mut unexpected = 0;
    for (n, name, f) in criteria {
        let o = f();
        let expected = !EXPECTED_FAIL.contains(&n);
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = match (o.pass, expected) {
            (true, true) | (false, false) => "",
            (false, true) => " [unexpected]",
            (true, false) => " [unexpected pass]",
        };
        if o.pass != expected {
            unexpected += 1;
        }
        println!("{tag} criterion {n} ({name}){note}: {}", o.detail);
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criteria did not meet expectation");
        std::process::exit(1);
    }
}

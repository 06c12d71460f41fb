#![allow(dead_code)]

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::Zero;

use qfinder_core::assembler::{Mode, QBinomialIdentity};
use qfinder_core::expr::{AffineExpr, Assignment, QuadExpr, VarId, VarTable};
use qfinder_core::frontend::{parse, run, RunConfig, RunResult};
use qfinder_core::poly::QPolynomial;
use qfinder_core::qalg::QBinomial;
use qfinder_core::trace::{Orientation, ResidualFactor};

pub fn input_text(name: &str) -> String {
    let path = format!("{}/../../inputs/{name}.qid", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn derive_with(name: &str, config: &RunConfig) -> (RunResult, Duration) {
    let doc = parse(&input_text(name)).expect("input parses");
    let t = Instant::now();
    let out = run(&doc, config).expect("pipeline runs");
    (out, t.elapsed())
}

pub fn derive(name: &str, mode: Mode) -> RunResult {
    derive_with(name, &RunConfig { mode, ..RunConfig::default() }).0
}

/// Parses `2A-B+r-1` style expressions over the table's names.
pub fn aff(vars: &VarTable, s: &str) -> AffineExpr {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut out = AffineExpr::zero();
    let bytes: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let mut sign = 1;
        if bytes[i] == '+' || bytes[i] == '-' {
            if bytes[i] == '-' {
                sign = -1;
            }
            i += 1;
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let coef: i64 = if i > start { bytes[start..i].iter().collect::<String>().parse().unwrap() } else { 1 };
        let vstart = i;
        while i < bytes.len() && bytes[i].is_alphanumeric() {
            i += 1;
        }
        if i > vstart {
            let name: String = bytes[vstart..i].iter().collect();
            let v = vars.lookup(&name).unwrap_or_else(|| panic!("unknown variable {name}"));
            out = &out + &AffineExpr::term(v, sign * coef);
        } else {
            out = &out + sign * coef;
        }
    }
    out
}

pub fn binom(vars: &VarTable, top: &str, bottom: &str, step: u32) -> QBinomial {
    QBinomial::new(aff(vars, top), aff(vars, bottom), step)
}

/// The parts of an identity a printed display pins down.
#[derive(Debug, Clone)]
pub struct Shape {
    pub q_exp: QuadExpr,
    pub lhs: Vec<QBinomial>,
    pub rhs: Vec<QBinomial>,
    pub rhs_residuals: Vec<ResidualFactor>,
    /// `None` when the display gives no upper limit.
    pub bounds: Option<Vec<AffineExpr>>,
}

fn canon(bs: &[QBinomial]) -> Vec<QBinomial> {
    let mut v: Vec<QBinomial> = bs.iter().map(QBinomial::canonical).collect();
    v.sort();
    v
}

impl Shape {
    pub fn substitute(&self, map: &BTreeMap<VarId, AffineExpr>) -> Shape {
        Shape {
            q_exp: self.q_exp.substitute_all(map),
            lhs: self.lhs.iter().map(|b| b.substitute_all(map)).collect(),
            rhs: self.rhs.iter().map(|b| b.substitute_all(map)).collect(),
            rhs_residuals: self
                .rhs_residuals
                .iter()
                .map(|r| ResidualFactor { expr: r.expr.substitute_all(map), ..r.clone() })
                .collect(),
            bounds: self.bounds.as_ref().map(|bs| bs.iter().map(|b| b.substitute_all(map)).collect()),
        }
    }

    /// Same coefficient, binomial multisets (modulo symmetry), residuals and
    /// upper limits; the sign must be trivial.
    pub fn matches(&self, id: &QBinomialIdentity) -> bool {
        let mut res = id.rhs_residuals.clone();
        res.sort();
        let mut want = self.rhs_residuals.clone();
        want.sort();
        let bounds_ok = match &self.bounds {
            None => true,
            Some(bs) => {
                let mut got: Vec<AffineExpr> =
                    id.upper_bound.iter().map(|b| { assert_eq!(b.divisor, 1); b.expr.clone() }).collect();
                got.sort();
                got.dedup();
                let mut bs = bs.clone();
                bs.sort();
                bs.dedup();
                got == bs
            }
        };
        id.coeff.sign.is_even()
            && id.coeff.q_exp == self.q_exp
            && canon(&id.lhs_binomials) == canon(&self.lhs)
            && canon(&id.rhs_binomials) == canon(&self.rhs)
            && id.lhs_residuals.is_empty()
            && res == want
            && bounds_ok
    }
}

pub fn residual(vars: &VarTable, e: &str, step: u32, orientation: Orientation) -> ResidualFactor {
    ResidualFactor { orientation, expr: aff(vars, e), step }
}

pub fn assignment(vars: &VarTable, values: &[(&str, i64)]) -> Assignment {
    values.iter().map(|(n, x)| (vars.lookup(n).unwrap(), *x)).collect()
}

pub fn substitution(vars: &VarTable, pairs: &[(&str, AffineExpr)]) -> BTreeMap<VarId, AffineExpr> {
    pairs.iter().map(|(n, e)| (vars.lookup(n).unwrap(), e.clone())).collect()
}

// ---------------------------------------------------------------------------
// Independent oracle: sparse Laurent polynomials and Gaussian binomials by the
// product formula with exact division, sharing no code with the library.

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Oracle(pub BTreeMap<i64, BigInt>);

impl Oracle {
    pub fn zero() -> Self {
        Oracle(BTreeMap::new())
    }

    pub fn one() -> Self {
        Oracle::monomial(1, 0)
    }

    pub fn monomial(c: i64, e: i64) -> Self {
        let mut m = BTreeMap::new();
        if c != 0 {
            m.insert(e, BigInt::from(c));
        }
        Oracle(m)
    }

    pub fn add(&self, o: &Oracle) -> Oracle {
        let mut m = self.0.clone();
        for (e, c) in &o.0 {
            let x = m.entry(*e).or_insert_with(BigInt::zero);
            *x += c;
            if x.is_zero() {
                m.remove(e);
            }
        }
        Oracle(m)
    }

    pub fn mul(&self, o: &Oracle) -> Oracle {
        let mut m: BTreeMap<i64, BigInt> = BTreeMap::new();
        for (e1, c1) in &self.0 {
            for (e2, c2) in &o.0 {
                *m.entry(e1 + e2).or_insert_with(BigInt::zero) += c1 * c2;
            }
        }
        m.retain(|_, c| !c.is_zero());
        Oracle(m)
    }

    /// `1 - q^e`.
    pub fn one_minus(e: i64) -> Oracle {
        Oracle::one().add(&Oracle::monomial(-1, e))
    }

    /// Exact division by `1 - q^k`, `k >= 1`; panics if inexact.
    pub fn div_one_minus(&self, k: i64) -> Oracle {
        assert!(k >= 1);
        if self.0.is_empty() {
            return Oracle::zero();
        }
        let lo = *self.0.keys().next().unwrap();
        let hi = *self.0.keys().last().unwrap();
        // r(q)(1 - q^k) = p(q)  =>  r_j = p_j + r_{j-k}
        let mut r: BTreeMap<i64, BigInt> = BTreeMap::new();
        for j in lo..=hi - k {
            let mut v = self.0.get(&j).cloned().unwrap_or_default();
            if let Some(prev) = r.get(&(j - k)) {
                v += prev;
            }
            r.insert(j, v);
        }
        r.retain(|_, c| !c.is_zero());
        let out = Oracle(r);
        assert_eq!(out.mul(&Oracle::one_minus(k)), *self, "inexact division by 1-q^{k}");
        out
    }

    pub fn from_poly(p: &QPolynomial) -> Oracle {
        Oracle(p.terms().map(|(e, c)| (e, c.clone())).collect())
    }
}

/// `binom(n, k)` in base `q^step` via `∏ (1-q^{step(n-k+i)}) / (1-q^{step·i})`.
pub fn gauss(n: i64, k: i64, step: i64) -> Oracle {
    if k < 0 || n - k < 0 {
        return Oracle::zero();
    }
    let k = k.min(n - k);
    let mut acc = Oracle::one();
    for i in 1..=k {
        acc = acc.mul(&Oracle::one_minus(step * (n - k + i)));
    }
    for i in 1..=k {
        acc = acc.div_one_minus(step * i);
    }
    acc
}

pub fn q_pow(e: i64) -> Oracle {
    Oracle::monomial(1, e)
}

pub fn product(fs: impl IntoIterator<Item = Oracle>) -> Oracle {
    fs.into_iter().fold(Oracle::one(), |a, f| a.mul(&f))
}

pub fn sum(fs: impl IntoIterator<Item = Oracle>) -> Oracle {
    fs.into_iter().fold(Oracle::zero(), |a, f| a.add(&f))
}

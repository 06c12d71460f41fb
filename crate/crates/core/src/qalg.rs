//! Square-bracket algebra: `[m;k]_n = (q^{km}; q^k)_n`, conversion from
//! q-Pochhammer notation, subscript elimination and the bridge between
//! bracket quotients and Gaussian binomials.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{AffineExpr, Assignment, ExprError, Parity, QuadExpr, VarId, VarTable};
use crate::poly::{gaussian_binomial, QPolynomial};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QalgError {
    #[error("step must be at least 1")]
    ZeroStep,
    #[error("exponent is not divisible by the step {0}")]
    NotDivisible(u32),
    #[error("bracket has no finite subscript")]
    NotSubscripted,
    #[error("regime {0:?} does not hold for this concrete bracket")]
    RegimeNotLicensed(PositivityCase),
    #[error("infinite brackets do not cancel for step {0}")]
    UnbalancedInfinite(u32),
    #[error("fraction is unbalanced in the summation variable for step {0}")]
    Unbalanced(u32),
    #[error("product side depends on the summation variable")]
    ProductDependsOnSummation,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subscript {
    Infinite,
    Finite(AffineExpr),
}

/// `[arg; step]_sub`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SquareBracket {
    pub arg: AffineExpr,
    pub step: u32,
    pub sub: Subscript,
}

impl SquareBracket {
    pub fn pure(arg: AffineExpr, step: u32) -> Self {
        SquareBracket { arg, step, sub: Subscript::Infinite }
    }

    pub fn finite(arg: AffineExpr, step: u32, sub: AffineExpr) -> Self {
        SquareBracket { arg, step, sub: Subscript::Finite(sub) }
    }

    pub fn constant(c: i64, step: u32) -> Self {
        SquareBracket::pure(AffineExpr::constant(c), step)
    }

    pub fn is_pure(&self) -> bool {
        self.sub == Subscript::Infinite
    }

    pub fn depends_on(&self, v: VarId) -> bool {
        self.arg.depends_on(v)
            || matches!(&self.sub, Subscript::Finite(s) if s.depends_on(v))
    }

    /// Constant argument and no variable subscript.
    pub fn is_constant(&self) -> bool {
        self.arg.is_constant()
            && match &self.sub {
                Subscript::Infinite => true,
                Subscript::Finite(s) => s.is_constant(),
            }
    }

    /// Net coefficient of `v` this bracket contributes after subscript
    /// elimination, which is the same in both elimination regimes.
    pub fn net_dependence(&self, v: VarId) -> i64 {
        match &self.sub {
            Subscript::Infinite => self.arg.coeff(v),
            Subscript::Finite(s) => -s.coeff(v),
        }
    }

    pub fn substitute_all(&self, map: &BTreeMap<VarId, AffineExpr>) -> Self {
        SquareBracket {
            arg: self.arg.substitute_all(map),
            step: self.step,
            sub: match &self.sub {
                Subscript::Infinite => Subscript::Infinite,
                Subscript::Finite(s) => Subscript::Finite(s.substitute_all(map)),
            },
        }
    }

    pub fn display<'a>(&'a self, vars: &'a VarTable) -> BracketDisplay<'a> {
        BracketDisplay { b: self, vars }
    }
}

pub struct BracketDisplay<'a> {
    b: &'a SquareBracket,
    vars: &'a VarTable,
}

impl fmt::Display for BracketDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.b.arg.display(self.vars))?;
        if self.b.step != 1 {
            write!(f, ";{}", self.b.step)?;
        }
        write!(f, "]")?;
        if let Subscript::Finite(s) = &self.b.sub {
            write!(f, "_{{{}}}", s.display(self.vars))?;
        }
        Ok(())
    }
}

/// Quotient of two bracket multisets. Stored sorted with common brackets
/// cancelled, so structural equality is multiset equality.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BracketFraction {
    num: Vec<SquareBracket>,
    den: Vec<SquareBracket>,
}

impl BracketFraction {
    pub fn one() -> Self {
        BracketFraction::default()
    }

    pub fn new(num: Vec<SquareBracket>, den: Vec<SquareBracket>) -> Self {
        let mut f = BracketFraction { num, den };
        f.canonicalize();
        f
    }

    pub fn of(b: SquareBracket) -> Self {
        BracketFraction::new(vec![b], vec![])
    }

    fn canonicalize(&mut self) {
        self.num.sort();
        self.den.sort();
        let (mut i, mut j) = (0, 0);
        let mut num = Vec::with_capacity(self.num.len());
        let mut den = Vec::with_capacity(self.den.len());
        while i < self.num.len() && j < self.den.len() {
            match self.num[i].cmp(&self.den[j]) {
                std::cmp::Ordering::Less => {
                    num.push(self.num[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    den.push(self.den[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        num.extend_from_slice(&self.num[i..]);
        den.extend_from_slice(&self.den[j..]);
        self.num = num;
        self.den = den;
    }

    pub fn num(&self) -> &[SquareBracket] {
        &self.num
    }

    pub fn den(&self) -> &[SquareBracket] {
        &self.den
    }

    pub fn is_one(&self) -> bool {
        self.num.is_empty() && self.den.is_empty()
    }

    pub fn mul(&self, other: &BracketFraction) -> Self {
        let mut num = self.num.clone();
        num.extend_from_slice(&other.num);
        let mut den = self.den.clone();
        den.extend_from_slice(&other.den);
        BracketFraction::new(num, den)
    }

    pub fn inv(&self) -> Self {
        BracketFraction { num: self.den.clone(), den: self.num.clone() }
    }

    pub fn div(&self, other: &BracketFraction) -> Self {
        self.mul(&other.inv())
    }

    pub fn depends_on(&self, v: VarId) -> bool {
        self.num.iter().chain(&self.den).any(|b| b.depends_on(v))
    }

    pub fn steps(&self) -> Vec<u32> {
        let mut s: Vec<u32> = self.num.iter().chain(&self.den).map(|b| b.step).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Brackets of the given step only.
    pub fn restrict_step(&self, step: u32) -> Self {
        BracketFraction {
            num: self.num.iter().filter(|b| b.step == step).cloned().collect(),
            den: self.den.iter().filter(|b| b.step == step).cloned().collect(),
        }
    }

    /// Numerator minus denominator net dependence on `v` for one step.
    pub fn balance(&self, v: VarId, step: u32) -> i64 {
        let side = |bs: &[SquareBracket]| -> i64 {
            bs.iter().filter(|b| b.step == step).map(|b| b.net_dependence(v)).sum()
        };
        side(&self.num) - side(&self.den)
    }

    pub fn substitute_all(&self, map: &BTreeMap<VarId, AffineExpr>) -> Self {
        BracketFraction::new(
            self.num.iter().map(|b| b.substitute_all(map)).collect(),
            self.den.iter().map(|b| b.substitute_all(map)).collect(),
        )
    }

    /// Exact value at a point as `(numerator, denominator)` polynomials.
    /// Pure brackets are truncated at a common cutoff per step, which is
    /// exact only when they are balanced per step.
    pub fn expand(&self, at: &Assignment) -> Result<(QPolynomial, QPolynomial), QalgError> {
        let mut num = QPolynomial::one();
        let mut den = QPolynomial::one();
        let mut pure_args: BTreeMap<u32, (i64, i64, i64)> = BTreeMap::new();
        for b in self.num.iter().chain(&self.den) {
            if b.is_pure() {
                let v = b.arg.eval(at)?;
                let e = pure_args.entry(b.step).or_insert((0, 0, i64::MIN));
                e.2 = e.2.max(v);
            }
        }
        for (on_top, list) in [(true, &self.num), (false, &self.den)] {
            for b in list.iter() {
                let k = b.step as i64;
                let m = b.arg.eval(at)?;
                let (top, bottom) = match &b.sub {
                    Subscript::Infinite => {
                        let slot = pure_args.get_mut(&b.step).expect("collected above");
                        if on_top {
                            slot.0 += 1;
                        } else {
                            slot.1 += 1;
                        }
                        (QPolynomial::pochhammer(k * m, k, slot.2 + 1 - m), QPolynomial::one())
                    }
                    Subscript::Finite(s) => {
                        let n = s.eval(at)?;
                        if n >= 0 {
                            (QPolynomial::pochhammer(k * m, k, n), QPolynomial::one())
                        } else {
                            // (a;q)_{-s} = 1/(a q^{-s}; q)_s
                            (QPolynomial::one(), QPolynomial::pochhammer(k * (m + n), k, -n))
                        }
                    }
                };
                if on_top {
                    num = &num * &top;
                    den = &den * &bottom;
                } else {
                    den = &den * &top;
                    num = &num * &bottom;
                }
            }
        }
        for (step, (n, d, _)) in pure_args {
            if n != d {
                return Err(QalgError::UnbalancedInfinite(step));
            }
        }
        Ok((num, den))
    }

    pub fn display<'a>(&'a self, vars: &'a VarTable) -> FractionDisplay<'a> {
        FractionDisplay { f: self, vars }
    }
}

pub struct FractionDisplay<'a> {
    f: &'a BracketFraction,
    vars: &'a VarTable,
}

impl fmt::Display for FractionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |bs: &[SquareBracket]| -> String {
            if bs.is_empty() {
                "1".to_string()
            } else {
                bs.iter().map(|b| b.display(self.vars).to_string()).collect::<Vec<_>>().join(" ")
            }
        };
        write!(f, "{}", list(&self.f.num))?;
        if !self.f.den.is_empty() {
            write!(f, " / {}", list(&self.f.den))?;
        }
        Ok(())
    }
}

/// `(-1)^sign · q^q_exp`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SumCoefficient {
    pub sign: Parity,
    pub q_exp: QuadExpr,
}

impl SumCoefficient {
    pub fn one() -> Self {
        SumCoefficient::default()
    }

    pub fn q_power(q_exp: QuadExpr) -> Self {
        SumCoefficient { sign: Parity::even(), q_exp }
    }

    pub fn mul(&self, other: &SumCoefficient) -> Self {
        SumCoefficient { sign: self.sign.add(&other.sign), q_exp: &self.q_exp + &other.q_exp }
    }

    pub fn inv(&self) -> Self {
        SumCoefficient { sign: self.sign.clone(), q_exp: -&self.q_exp }
    }

    pub fn is_one(&self) -> bool {
        self.sign.is_even() && self.q_exp.is_zero()
    }

    pub fn depends_on(&self, v: VarId) -> bool {
        self.sign.expr().depends_on(v) || self.q_exp.depends_on(v)
    }

    pub fn expand(&self, at: &Assignment) -> Result<QPolynomial, ExprError> {
        let sign = self.sign.sign_at(at)?;
        Ok(QPolynomial::monomial(sign.into(), self.q_exp.eval(at)?))
    }

    pub fn substitute_all(&self, map: &BTreeMap<VarId, AffineExpr>) -> Self {
        SumCoefficient { sign: self.sign.substitute_all(map), q_exp: self.q_exp.substitute_all(map) }
    }
}

/// `Σ_n coeff · sum_fraction = product_fraction`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HypergeometricIdentity {
    pub vars: VarTable,
    pub coeff: SumCoefficient,
    pub sum_fraction: BracketFraction,
    pub product_fraction: BracketFraction,
}

impl HypergeometricIdentity {
    /// Checks that the product side is free of the summation variable and
    /// that the sum side is balanced for every step.
    pub fn validate(&self) -> Result<(), QalgError> {
        let n = self.vars.summation();
        if self.product_fraction.depends_on(n) {
            return Err(QalgError::ProductDependsOnSummation);
        }
        for step in self.sum_fraction.steps() {
            if self.sum_fraction.balance(n, step) != 0 {
                return Err(QalgError::Unbalanced(step));
            }
        }
        Ok(())
    }
}

/// `binom(top, bottom)_{q^step}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct QBinomial {
    pub top: AffineExpr,
    pub bottom: AffineExpr,
    pub step: u32,
}

impl QBinomial {
    pub fn new(top: AffineExpr, bottom: AffineExpr, step: u32) -> Self {
        QBinomial { top, bottom, step }
    }

    /// `[bottom+1][top-bottom+1] / ([top+1][1])`, all with this step.
    pub fn to_brackets(&self) -> BracketFraction {
        let k = self.step;
        BracketFraction::new(
            vec![
                SquareBracket::pure(&self.bottom + 1, k),
                SquareBracket::pure(&(&self.top - &self.bottom) + 1, k),
            ],
            vec![SquareBracket::pure(&self.top + 1, k), SquareBracket::constant(1, k)],
        )
    }

    pub fn complement(&self) -> AffineExpr {
        &self.top - &self.bottom
    }

    /// Same binomial with `bottom` replaced by `top - bottom` when that is
    /// smaller in the canonical order.
    pub fn canonical(&self) -> Self {
        let other = self.complement();
        if other < self.bottom {
            QBinomial { top: self.top.clone(), bottom: other, step: self.step }
        } else {
            self.clone()
        }
    }

    pub fn expand(&self, at: &Assignment) -> Result<QPolynomial, ExprError> {
        Ok(expand_binomial_poly(self.top.eval(at)?, self.bottom.eval(at)?, self.step))
    }

    pub fn substitute_all(&self, map: &BTreeMap<VarId, AffineExpr>) -> Self {
        QBinomial {
            top: self.top.substitute_all(map),
            bottom: self.bottom.substitute_all(map),
            step: self.step,
        }
    }
}

/// Exact Gaussian binomial polynomial; zero out of range.
pub fn expand_binomial_poly(top: i64, bottom: i64, step: u32) -> QPolynomial {
    gaussian_binomial(top, bottom, step)
}

/// Bracket to binomial conversion: `binom(m+n, m)_{q^k}` together with
/// the bracket quotient it replaces.
pub fn bracket_to_binomial(m: &AffineExpr, n: &AffineExpr, step: u32) -> (QBinomial, BracketFraction) {
    let b = QBinomial::new(m + n, m.clone(), step);
    let consumed = b.to_brackets();
    (b, consumed)
}

pub fn binomial_to_brackets(b: &QBinomial) -> BracketFraction {
    b.to_brackets()
}

/// How a q-Pochhammer product is written in the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PochhammerKind {
    /// `(q^e; q^k)_n`
    Plain,
    /// `(-q^e; q^k)_n`
    Negated,
    /// `∏_{r=1}^{k-1} (q^{e+r}; q^k)_n`
    OffsetProduct,
}

/// Rewrites a Pochhammer product with base `q^base_exp` and base step
/// `q^step` as a bracket quotient. `base_exp` must be divisible by `step`.
pub fn pochhammer_to_bracket(
    base_exp: &AffineExpr,
    step: u32,
    sub: &Subscript,
    kind: PochhammerKind,
) -> Result<BracketFraction, QalgError> {
    if step == 0 {
        return Err(QalgError::ZeroStep);
    }
    let k = step as i64;
    let divisible =
        base_exp.constant_term() % k == 0 && base_exp.terms().all(|(_, c)| c % k == 0);
    if !divisible {
        return Err(QalgError::NotDivisible(step));
    }
    let m = AffineExpr::from_parts(
        base_exp.constant_term() / k,
        base_exp.terms().map(|(v, c)| (v, c / k)),
    );
    let with = |arg: AffineExpr, step: u32, sub: Subscript| SquareBracket { arg, step, sub };
    Ok(match kind {
        PochhammerKind::Plain => BracketFraction::of(with(m, step, sub.clone())),
        PochhammerKind::Negated => BracketFraction::new(
            vec![with(m.clone(), 2 * step, sub.clone())],
            vec![with(m, step, sub.clone())],
        ),
        PochhammerKind::OffsetProduct => {
            let long_sub = match sub {
                Subscript::Infinite => Subscript::Infinite,
                Subscript::Finite(n) => Subscript::Finite(n.scale(k)),
            };
            BracketFraction::new(
                vec![with(m.scale(k), 1, long_sub)],
                vec![with(m, step, sub.clone())],
            )
        }
    })
}

/// Subscript-elimination regimes for a bracket argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PositivityCase {
    /// pure bracket, `m >= 1`
    PureBracketPositive,
    /// `[m]_n` with `m >= 1`
    SubscriptedArgPositive,
    /// `[m]_n` with `m <= -n`
    SubscriptedArgVeryNegative,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Elimination {
    /// The middle case `-n < m <= 0`: the product vanishes.
    Zero,
    Value { coeff: SumCoefficient, fraction: BracketFraction },
}

/// Removes the finite subscript of `b` under the given regime.
pub fn eliminate_subscript(b: &SquareBracket, case: PositivityCase) -> Result<Elimination, QalgError> {
    let Subscript::Finite(n) = &b.sub else {
        return Err(QalgError::NotSubscripted);
    };
    let m = &b.arg;
    let k = b.step;
    if m.is_constant() && n.is_constant() {
        let (mv, nv) = (m.constant_term(), n.constant_term());
        if nv >= 0 && -nv < mv && mv <= 0 {
            return Ok(Elimination::Zero);
        }
        let holds = match case {
            PositivityCase::SubscriptedArgPositive => mv >= 1,
            PositivityCase::SubscriptedArgVeryNegative => mv <= -nv,
            PositivityCase::PureBracketPositive => false,
        };
        if !holds {
            return Err(QalgError::RegimeNotLicensed(case));
        }
    }
    match case {
        PositivityCase::SubscriptedArgPositive => Ok(Elimination::Value {
            coeff: SumCoefficient::one(),
            fraction: BracketFraction::new(
                vec![SquareBracket::pure(m.clone(), k)],
                vec![SquareBracket::pure(m + n, k)],
            ),
        }),
        PositivityCase::SubscriptedArgVeryNegative => {
            // k (m n + binom(n, 2))
            let q_exp = (&m.mul_affine(n) + &QuadExpr::binom2(n)).scale(k as i64);
            let neg_m = -m;
            Ok(Elimination::Value {
                coeff: SumCoefficient { sign: Parity::from_affine(n), q_exp },
                fraction: BracketFraction::new(
                    vec![SquareBracket::pure(&(&neg_m - n) + 1, k)],
                    vec![SquareBracket::pure(&neg_m + 1, k)],
                ),
            })
        }
        PositivityCase::PureBracketPositive => Err(QalgError::RegimeNotLicensed(case)),
    }
}

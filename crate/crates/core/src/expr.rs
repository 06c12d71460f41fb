//! Exact arithmetic foundation: variable tables, integer affine forms,
//! integer-valued quadratic exponents and sign parities.
//!
//! Every bracket argument, subscript and binomial index in the engine is an
//! [`AffineExpr`]. Exponents of `q` that arise from Pochhammer products are at
//! most quadratic and may carry a factor of one half (as in `n(n-1)/2`), so
//! [`QuadExpr`] stores doubled coefficients and stays in the integers.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact rational used by the LP kernel.
pub type Rational = num_rational::BigRational;

/// Concrete integer values for some variables.
pub type Assignment = BTreeMap<VarId, i64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("no value for variable #{0}")]
    MissingVariable(usize),
    #[error("expression is not integer valued: {0}")]
    NonInteger(String),
    #[error("variable table has no summation variable")]
    NoSummationVariable,
}

/// Index of a variable inside a [`VarTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

/// Ordered, duplicate-free list of variable names with one distinguished
/// summation variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarTable {
    names: Vec<String>,
    summation: VarId,
}

impl VarTable {
    /// Parameters keep their given order; the summation variable is appended.
    pub fn new<S: AsRef<str>>(params: &[S], summation: &str) -> Result<Self, ExprError> {
        let mut names: Vec<String> = Vec::with_capacity(params.len() + 1);
        for p in params.iter().map(AsRef::as_ref).chain(std::iter::once(summation)) {
            if names.iter().any(|n| n == p) {
                return Err(ExprError::DuplicateVariable(p.to_string()));
            }
            names.push(p.to_string());
        }
        let summation = VarId(names.len() - 1);
        Ok(VarTable { names, summation })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Dimension of the embedding space: one slot per variable plus the constant.
    pub fn dim(&self) -> usize {
        self.names.len() + 1
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.names.iter().position(|n| n == name).map(VarId)
    }

    pub fn summation(&self) -> VarId {
        self.summation
    }

    pub fn params(&self) -> impl Iterator<Item = VarId> + '_ {
        let s = self.summation;
        (0..self.names.len()).map(VarId).filter(move |v| *v != s)
    }

    /// Elimination order used by the assembler: summation variable first,
    /// then parameters in declaration order.
    pub fn elimination_order(&self) -> Vec<VarId> {
        std::iter::once(self.summation).chain(self.params()).collect()
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.names.len()).map(VarId)
    }
}

/// `constant + Σ coeff·var` with integer coefficients. Zero coefficients are
/// never stored, so structural equality is semantic equality.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AffineExpr {
    constant: i64,
    coeffs: BTreeMap<VarId, i64>,
}

impl AffineExpr {
    pub fn zero() -> Self {
        AffineExpr::default()
    }

    pub fn constant(c: i64) -> Self {
        AffineExpr { constant: c, coeffs: BTreeMap::new() }
    }

    pub fn var(v: VarId) -> Self {
        AffineExpr::term(v, 1)
    }

    pub fn term(v: VarId, c: i64) -> Self {
        let mut coeffs = BTreeMap::new();
        if c != 0 {
            coeffs.insert(v, c);
        }
        AffineExpr { constant: 0, coeffs }
    }

    pub fn from_parts(constant: i64, terms: impl IntoIterator<Item = (VarId, i64)>) -> Self {
        let mut e = AffineExpr::constant(constant);
        for (v, c) in terms {
            e.add_term(v, c);
        }
        e
    }

    fn add_term(&mut self, v: VarId, c: i64) {
        if c == 0 {
            return;
        }
        let slot = self.coeffs.entry(v).or_insert(0);
        *slot += c;
        if *slot == 0 {
            self.coeffs.remove(&v);
        }
    }

    pub fn constant_term(&self) -> i64 {
        self.constant
    }

    pub fn coeff(&self, v: VarId) -> i64 {
        self.coeffs.get(&v).copied().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (VarId, i64)> + '_ {
        self.coeffs.iter().map(|(v, c)| (*v, *c))
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0 && self.coeffs.is_empty()
    }

    pub fn depends_on(&self, v: VarId) -> bool {
        self.coeffs.contains_key(&v)
    }

    /// Copy of `self` with the `v` term removed.
    pub fn without(&self, v: VarId) -> Self {
        let mut e = self.clone();
        e.coeffs.remove(&v);
        e
    }

    pub fn scale(&self, k: i64) -> Self {
        if k == 0 {
            return AffineExpr::zero();
        }
        AffineExpr {
            constant: self.constant * k,
            coeffs: self.coeffs.iter().map(|(v, c)| (*v, c * k)).collect(),
        }
    }

    pub fn eval(&self, at: &Assignment) -> Result<i64, ExprError> {
        let mut acc = self.constant;
        for (v, c) in &self.coeffs {
            let x = at.get(v).ok_or(ExprError::MissingVariable(v.0))?;
            acc += c * x;
        }
        Ok(acc)
    }

    /// Replace `v` by `by`.
    pub fn substitute(&self, v: VarId, by: &AffineExpr) -> Self {
        let c = self.coeff(v);
        if c == 0 {
            return self.clone();
        }
        &self.without(v) + &by.scale(c)
    }

    /// Simultaneous substitution of several variables.
    pub fn substitute_all(&self, map: &BTreeMap<VarId, AffineExpr>) -> Self {
        let mut out = AffineExpr::constant(self.constant);
        for (v, c) in &self.coeffs {
            match map.get(v) {
                Some(by) => out = &out + &by.scale(*c),
                None => out.add_term(*v, *c),
            }
        }
        out
    }

    /// Embedding `(a0, a1, ..., an)` with the constant in slot 0.
    pub fn to_vector(&self, dim: usize) -> Vec<i64> {
        let mut v = vec![0; dim];
        v[0] = self.constant;
        for (var, c) in &self.coeffs {
            v[var.0 + 1] = *c;
        }
        v
    }

    pub fn from_vector(v: &[i64]) -> Self {
        AffineExpr::from_parts(v[0], v.iter().skip(1).enumerate().map(|(i, c)| (VarId(i), *c)))
    }

    /// Exact product of two affine forms.
    pub fn mul_affine(&self, other: &AffineExpr) -> QuadExpr {
        QuadExpr::product(self, other)
    }

    pub fn display<'a>(&'a self, vars: &'a VarTable) -> AffineDisplay<'a> {
        AffineDisplay { expr: self, vars }
    }
}

impl Add for &AffineExpr {
    type Output = AffineExpr;
    fn add(self, rhs: &AffineExpr) -> AffineExpr {
        let mut out = self.clone();
        out.constant += rhs.constant;
        for (v, c) in &rhs.coeffs {
            out.add_term(*v, *c);
        }
        out
    }
}

impl Add for AffineExpr {
    type Output = AffineExpr;
    fn add(self, rhs: AffineExpr) -> AffineExpr {
        &self + &rhs
    }
}

impl Add<i64> for &AffineExpr {
    type Output = AffineExpr;
    fn add(self, rhs: i64) -> AffineExpr {
        let mut out = self.clone();
        out.constant += rhs;
        out
    }
}

impl Add<i64> for AffineExpr {
    type Output = AffineExpr;
    fn add(mut self, rhs: i64) -> AffineExpr {
        self.constant += rhs;
        self
    }
}

impl Sub for &AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: &AffineExpr) -> AffineExpr {
        self + &(-rhs)
    }
}

impl Sub for AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: AffineExpr) -> AffineExpr {
        &self - &rhs
    }
}

impl Sub<i64> for &AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: i64) -> AffineExpr {
        self + (-rhs)
    }
}

impl Sub<i64> for AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: i64) -> AffineExpr {
        self + (-rhs)
    }
}

impl Neg for &AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        self.scale(-1)
    }
}

impl Neg for AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        self.scale(-1)
    }
}

impl Mul<i64> for &AffineExpr {
    type Output = AffineExpr;
    fn mul(self, rhs: i64) -> AffineExpr {
        self.scale(rhs)
    }
}

pub struct AffineDisplay<'a> {
    expr: &'a AffineExpr,
    vars: &'a VarTable,
}

impl fmt::Display for AffineDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in self.expr.terms() {
            let name = self.vars.name(v);
            match (c, first) {
                (1, true) => write!(f, "{name}")?,
                (-1, _) => write!(f, "-{name}")?,
                (1, false) => write!(f, "+{name}")?,
                (c, true) => write!(f, "{c}{name}")?,
                (c, false) if c < 0 => write!(f, "{c}{name}")?,
                (c, false) => write!(f, "+{c}{name}")?,
            }
            first = false;
        }
        let k = self.expr.constant;
        if first {
            write!(f, "{k}")
        } else if k > 0 {
            write!(f, "+{k}")
        } else if k < 0 {
            write!(f, "{k}")
        } else {
            Ok(())
        }
    }
}

/// Monomials of degree at most two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Monomial {
    Const,
    Lin(VarId),
    /// Ordered pair, first index not greater than second.
    Quad(VarId, VarId),
}

impl Monomial {
    fn quad(a: VarId, b: VarId) -> Self {
        if a <= b {
            Monomial::Quad(a, b)
        } else {
            Monomial::Quad(b, a)
        }
    }
}

/// Serializes a map with structured keys as a list of pairs, since JSON
/// object keys must be strings.
mod map_as_pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<K: Serialize, V: Serialize, S: Serializer>(
        m: &BTreeMap<K, V>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.iter())
    }

    pub fn deserialize<'de, K, V, D>(d: D) -> Result<BTreeMap<K, V>, D::Error>
    where
        K: Deserialize<'de> + Ord,
        V: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        Ok(Vec::<(K, V)>::deserialize(d)?.into_iter().collect())
    }
}

/// Quadratic form with coefficients stored doubled: the value is
/// `Σ half_coeffs[m]·m / 2`. Every constructor keeps the value integer on
/// integer points.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuadExpr {
    #[serde(with = "map_as_pairs")]
    half_coeffs: BTreeMap<Monomial, i64>,
}

impl QuadExpr {
    pub fn zero() -> Self {
        QuadExpr::default()
    }

    pub fn constant(c: i64) -> Self {
        QuadExpr::from_affine(&AffineExpr::constant(c))
    }

    pub fn from_affine(a: &AffineExpr) -> Self {
        let mut q = QuadExpr::zero();
        q.add_half(Monomial::Const, 2 * a.constant_term());
        for (v, c) in a.terms() {
            q.add_half(Monomial::Lin(v), 2 * c);
        }
        q
    }

    /// Builds from doubled coefficients, rejecting forms that are not
    /// integer-valued on the integer lattice.
    pub fn from_half_coeffs(
        half: impl IntoIterator<Item = (Monomial, i64)>,
    ) -> Result<Self, ExprError> {
        let mut q = QuadExpr::zero();
        for (m, c) in half {
            let m = match m {
                Monomial::Quad(a, b) => Monomial::quad(a, b),
                m => m,
            };
            q.add_half(m, c);
        }
        if q.is_integer_valued() {
            Ok(q)
        } else {
            Err(ExprError::NonInteger(format!("{:?}", q.half_coeffs)))
        }
    }

    fn add_half(&mut self, m: Monomial, c: i64) {
        if c == 0 {
            return;
        }
        let slot = self.half_coeffs.entry(m).or_insert(0);
        *slot += c;
        if *slot == 0 {
            self.half_coeffs.remove(&m);
        }
    }

    /// `a·b`.
    pub fn product(a: &AffineExpr, b: &AffineExpr) -> Self {
        let mut q = QuadExpr::zero();
        let ka = a.constant_term();
        let kb = b.constant_term();
        q.add_half(Monomial::Const, 2 * ka * kb);
        for (v, c) in b.terms() {
            q.add_half(Monomial::Lin(v), 2 * ka * c);
        }
        for (v, c) in a.terms() {
            q.add_half(Monomial::Lin(v), 2 * kb * c);
            for (w, d) in b.terms() {
                q.add_half(Monomial::quad(v, w), 2 * c * d);
            }
        }
        q
    }

    /// `binomial(a, 2) = a(a-1)/2`.
    pub fn binom2(a: &AffineExpr) -> Self {
        let doubled = &QuadExpr::product(a, a) - &QuadExpr::from_affine(a);
        doubled.halve_unchecked()
    }

    fn halve_unchecked(mut self) -> Self {
        for c in self.half_coeffs.values_mut() {
            debug_assert!(*c % 2 == 0);
            *c /= 2;
        }
        self
    }

    pub fn half_coeffs(&self) -> impl Iterator<Item = (Monomial, i64)> + '_ {
        self.half_coeffs.iter().map(|(m, c)| (*m, *c))
    }

    pub fn half_coeff(&self, m: Monomial) -> i64 {
        self.half_coeffs.get(&m).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.half_coeffs.is_empty()
    }

    pub fn depends_on(&self, v: VarId) -> bool {
        self.half_coeffs.keys().any(|m| match m {
            Monomial::Const => false,
            Monomial::Lin(a) => *a == v,
            Monomial::Quad(a, b) => *a == v || *b == v,
        })
    }

    /// Integer-valued iff the constant is even, every cross term is even and
    /// `c_vv + c_v` is even for each variable (x² ≡ x mod 2).
    pub fn is_integer_valued(&self) -> bool {
        let mut diag: BTreeMap<VarId, i64> = BTreeMap::new();
        for (m, c) in &self.half_coeffs {
            match m {
                Monomial::Const => {
                    if c % 2 != 0 {
                        return false;
                    }
                }
                Monomial::Lin(v) => *diag.entry(*v).or_insert(0) += c,
                Monomial::Quad(a, b) if a == b => *diag.entry(*a).or_insert(0) += c,
                Monomial::Quad(..) => {
                    if c % 2 != 0 {
                        return false;
                    }
                }
            }
        }
        diag.values().all(|c| c % 2 == 0)
    }

    pub fn scale(&self, k: i64) -> Self {
        let mut q = QuadExpr::zero();
        for (m, c) in &self.half_coeffs {
            q.add_half(*m, c * k);
        }
        q
    }

    pub fn eval(&self, at: &Assignment) -> Result<i64, ExprError> {
        let get = |v: &VarId| at.get(v).copied().ok_or(ExprError::MissingVariable(v.0));
        let mut acc: i64 = 0;
        for (m, c) in &self.half_coeffs {
            acc += match m {
                Monomial::Const => *c,
                Monomial::Lin(v) => c * get(v)?,
                Monomial::Quad(a, b) => c * get(a)? * get(b)?,
            };
        }
        if acc % 2 != 0 {
            return Err(ExprError::NonInteger(format!("{acc}/2")));
        }
        Ok(acc / 2)
    }

    pub fn substitute_all(&self, map: &BTreeMap<VarId, AffineExpr>) -> Self {
        let lift = |v: &VarId| map.get(v).cloned().unwrap_or_else(|| AffineExpr::var(*v));
        let mut out = QuadExpr::zero();
        for (m, c) in &self.half_coeffs {
            // each piece is built from doubled coefficients, so scale then halve
            let piece = match m {
                Monomial::Const => QuadExpr::constant(*c),
                Monomial::Lin(v) => QuadExpr::from_affine(&lift(v).scale(*c)),
                Monomial::Quad(a, b) => QuadExpr::product(&lift(a), &lift(b)).scale(*c),
            };
            out = &out + &piece;
        }
        out.halve_unchecked()
    }

    pub fn display<'a>(&'a self, vars: &'a VarTable) -> QuadDisplay<'a> {
        QuadDisplay { expr: self, vars, latex: false }
    }

    pub fn latex<'a>(&'a self, vars: &'a VarTable) -> QuadDisplay<'a> {
        QuadDisplay { expr: self, vars, latex: true }
    }
}

impl Add for &QuadExpr {
    type Output = QuadExpr;
    fn add(self, rhs: &QuadExpr) -> QuadExpr {
        let mut out = self.clone();
        for (m, c) in &rhs.half_coeffs {
            out.add_half(*m, *c);
        }
        out
    }
}

impl Sub for &QuadExpr {
    type Output = QuadExpr;
    fn sub(self, rhs: &QuadExpr) -> QuadExpr {
        self + &rhs.scale(-1)
    }
}

impl Neg for &QuadExpr {
    type Output = QuadExpr;
    fn neg(self) -> QuadExpr {
        self.scale(-1)
    }
}

pub struct QuadDisplay<'a> {
    expr: &'a QuadExpr,
    vars: &'a VarTable,
    latex: bool,
}

impl QuadDisplay<'_> {
    fn write_terms(&self, f: &mut fmt::Formatter<'_>, divisor: i64) -> fmt::Result {
        let mut first = true;
        // quadratic terms first, then linear, then the constant
        let mut ordered: Vec<(Monomial, i64)> = self.expr.half_coeffs().collect();
        ordered.sort_by_key(|(m, _)| match m {
            Monomial::Quad(a, b) => (0, a.0, b.0),
            Monomial::Lin(a) => (1, a.0, 0),
            Monomial::Const => (2, 0, 0),
        });
        for (m, c) in ordered {
            let c = c / divisor;
            let body = match m {
                Monomial::Const => String::new(),
                Monomial::Lin(v) => self.vars.name(v).to_string(),
                Monomial::Quad(a, b) if a == b => {
                    if self.latex {
                        format!("{}^{{2}}", self.vars.name(a))
                    } else {
                        format!("{}^2", self.vars.name(a))
                    }
                }
                Monomial::Quad(a, b) => {
                    if self.latex {
                        format!("{} {}", self.vars.name(a), self.vars.name(b))
                    } else {
                        format!("{}*{}", self.vars.name(a), self.vars.name(b))
                    }
                }
            };
            let sign = if c < 0 { "-" } else if first { "" } else { "+" };
            let mag = c.abs();
            if body.is_empty() {
                write!(f, "{sign}{mag}")?;
            } else if mag == 1 {
                write!(f, "{sign}{body}")?;
            } else if self.latex {
                write!(f, "{sign}{mag} {body}")?;
            } else {
                write!(f, "{sign}{mag}*{body}")?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl fmt::Display for QuadDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let all_even = self.expr.half_coeffs.values().all(|c| c % 2 == 0);
        if all_even {
            self.write_terms(f, 2)
        } else if self.latex {
            write!(f, "\\frac{{")?;
            self.write_terms(f, 1)?;
            write!(f, "}}{{2}}")
        } else {
            write!(f, "(")?;
            self.write_terms(f, 1)?;
            write!(f, ")/2")
        }
    }
}

/// Exponent of `(-1)`, reduced mod 2: coefficients and constant in {0, 1}.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Parity(AffineExpr);

impl Parity {
    pub fn even() -> Self {
        Parity::default()
    }

    pub fn from_affine(e: &AffineExpr) -> Self {
        let reduce = |c: i64| c.rem_euclid(2);
        Parity(AffineExpr::from_parts(
            reduce(e.constant_term()),
            e.terms().map(|(v, c)| (v, reduce(c))),
        ))
    }

    pub fn expr(&self) -> &AffineExpr {
        &self.0
    }

    pub fn is_even(&self) -> bool {
        self.0.is_zero()
    }

    pub fn add(&self, other: &Parity) -> Parity {
        Parity::from_affine(&(&self.0 + &other.0))
    }

    /// `+1` or `-1` at the given point.
    pub fn sign_at(&self, at: &Assignment) -> Result<i64, ExprError> {
        Ok(if self.0.eval(at)?.rem_euclid(2) == 0 { 1 } else { -1 })
    }

    pub fn substitute_all(&self, map: &BTreeMap<VarId, AffineExpr>) -> Parity {
        Parity::from_affine(&self.0.substitute_all(map))
    }
}

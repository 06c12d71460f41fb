//! The input language.
//!
//! ```text
//! vars A B C sum n;
//! coeff q^{n*(C-A-B)};
//! lhs [A]_{n} [B]_{n} / [1]_{n} [C]_{n};
//! rhs [C-A] [C-B] / [C] [C-A-B];
//! ```
//!
//! Brackets are `[arg;step]_{sub}` with `;step` and `_{sub}` optional.
//! Pochhammer symbols `(q^{e};q^{k})_{n}` and `(-q^{e};q^{k})_{n}` are
//! accepted and rewritten into brackets. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::expr::{AffineExpr, Monomial, Parity, QuadExpr, VarId, VarTable};
use crate::qalg::{
    pochhammer_to_bracket, BracketFraction, HypergeometricIdentity, PochhammerKind, QalgError,
    SquareBracket, Subscript, SumCoefficient,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("expected {0}")]
    Expected(String),
    #[error("unexpected character {0:?}")]
    BadChar(char),
    #[error("integer literal out of range")]
    Overflow,
    #[error("undeclared variable {0}")]
    Undeclared(String),
    #[error("`q` is reserved")]
    ReservedName,
    #[error("duplicate variable {0}")]
    Duplicate(String),
    #[error("expression is not affine with integer coefficients")]
    NonAffine,
    #[error("exponent is not a quadratic with integer values")]
    NonQuadratic,
    #[error("empty fraction")]
    EmptyFraction,
    #[error("step must be a positive integer")]
    BadStep,
    #[error(transparent)]
    Qalg(#[from] QalgError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {kind}")]
pub struct ParseError {
    pub span: Span,
    pub kind: ParseErrorKind,
}

/// A factor as written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Factor {
    Bracket(SquareBracket),
    Pochhammer { base_exp: AffineExpr, step: u32, sub: Subscript, negated: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FactorList {
    pub num: Vec<Factor>,
    pub den: Vec<Factor>,
}

/// A parsed document. Equality ignores source positions.
#[derive(Debug, Clone)]
pub struct InputDocument {
    pub vars: VarTable,
    pub coeff: SumCoefficient,
    pub lhs: FactorList,
    pub rhs: FactorList,
    /// Start of every factor: lhs numerator, lhs denominator, rhs numerator,
    /// rhs denominator.
    pub spans: Vec<Span>,
}

impl PartialEq for InputDocument {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars && self.coeff == other.coeff && self.lhs == other.lhs && self.rhs == other.rhs
    }
}

impl Eq for InputDocument {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(char),
    Eof,
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let span = Span { line, col };
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            chars.next();
            col += 1;
        } else if c == '#' {
            while chars.peek().is_some_and(|c| *c != '\n') {
                chars.next();
            }
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                s.push(*d);
                chars.next();
                col += 1;
            }
            let v = s.parse().map_err(|_| ParseError { span, kind: ParseErrorKind::Overflow })?;
            out.push((Tok::Int(v), span));
        } else if c.is_alphabetic() {
            let mut s = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_alphanumeric() || **d == '\'') {
                s.push(*d);
                chars.next();
                col += 1;
            }
            out.push((Tok::Ident(s), span));
        } else if ";[]_{}()/+-*^,".contains(c) {
            chars.next();
            col += 1;
            out.push((Tok::Sym(c), span));
        } else if c == '\u{2212}' {
            // typographic minus
            chars.next();
            col += 1;
            out.push((Tok::Sym('-'), span));
        } else {
            return Err(ParseError { span, kind: ParseErrorKind::BadChar(c) });
        }
    }
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}

/// Degree-two polynomial with rational coefficients, used while parsing.
#[derive(Debug, Clone, Default)]
struct Poly(BTreeMap<Monomial, Ratio<i64>>);

impl Poly {
    fn constant(c: i64) -> Self {
        let mut p = Poly::default();
        p.add_term(Monomial::Const, Ratio::from_integer(c));
        p
    }

    fn var(v: VarId) -> Self {
        let mut p = Poly::default();
        p.add_term(Monomial::Lin(v), Ratio::one());
        p
    }

    fn add_term(&mut self, m: Monomial, c: Ratio<i64>) {
        let e = self.0.entry(m).or_insert_with(Ratio::zero);
        *e += c;
        if e.is_zero() {
            self.0.remove(&m);
        }
    }

    fn add(mut self, other: &Poly, sign: i64) -> Self {
        for (m, c) in &other.0 {
            self.add_term(*m, *c * sign);
        }
        self
    }

    fn degree(&self) -> u32 {
        self.0
            .keys()
            .map(|m| match m {
                Monomial::Const => 0,
                Monomial::Lin(_) => 1,
                Monomial::Quad(..) => 2,
            })
            .max()
            .unwrap_or(0)
    }

    fn mul(&self, other: &Poly) -> Option<Poly> {
        if self.degree() + other.degree() > 2 {
            return None;
        }
        let mut out = Poly::default();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &other.0 {
                let m = match (*m1, *m2) {
                    (Monomial::Const, m) | (m, Monomial::Const) => m,
                    (Monomial::Lin(a), Monomial::Lin(b)) => Monomial::Quad(a.min(b), a.max(b)),
                    _ => unreachable!("degree checked"),
                };
                out.add_term(m, c1 * c2);
            }
        }
        Some(out)
    }

    fn scale(&self, c: Ratio<i64>) -> Poly {
        let mut out = Poly::default();
        for (m, x) in &self.0 {
            out.add_term(*m, x * c);
        }
        out
    }

    fn to_affine(&self) -> Option<AffineExpr> {
        let mut constant = 0;
        let mut terms = Vec::new();
        for (m, c) in &self.0 {
            if !c.is_integer() {
                return None;
            }
            match m {
                Monomial::Const => constant = c.to_integer(),
                Monomial::Lin(v) => terms.push((*v, c.to_integer())),
                Monomial::Quad(..) => return None,
            }
        }
        Some(AffineExpr::from_parts(constant, terms))
    }

    fn to_quad(&self) -> Option<QuadExpr> {
        let mut half = Vec::new();
        for (m, c) in &self.0 {
            let doubled = c * 2;
            if !doubled.is_integer() {
                return None;
            }
            half.push((*m, doubled.to_integer()));
        }
        let q = QuadExpr::from_half_coeffs(half).ok()?;
        q.is_integer_valued().then_some(q)
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    vars: Option<&'a VarTable>,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, kind: ParseErrorKind) -> PResult<T> {
        Err(ParseError { span: self.span(), kind })
    }

    fn expected<T>(&self, what: &str) -> PResult<T> {
        self.err(ParseErrorKind::Expected(what.to_string()))
    }

    fn is_sym(&self, c: char) -> bool {
        *self.peek() == Tok::Sym(c)
    }

    fn eat_sym(&mut self, c: char) -> bool {
        let hit = self.is_sym(c);
        if hit {
            self.bump();
        }
        hit
    }

    fn expect_sym(&mut self, c: char) -> PResult<()> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            self.expected(&format!("`{c}`"))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.expected(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.expected("identifier"),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        match *self.peek() {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            _ => self.expected("integer"),
        }
    }

    // expr := ['-'] term (('+'|'-') term)*
    fn expr(&mut self) -> PResult<Poly> {
        let mut acc = if self.eat_sym('-') { Poly::default().add(&self.term()?, -1) } else { self.term()? };
        loop {
            if self.eat_sym('+') {
                acc = acc.add(&self.term()?, 1);
            } else if self.eat_sym('-') {
                acc = acc.add(&self.term()?, -1);
            } else {
                return Ok(acc);
            }
        }
    }

    // term := power (('*' | implicit) power | '/' int)*
    fn term(&mut self) -> PResult<Poly> {
        let mut acc = self.power()?;
        loop {
            let start = self.span();
            if self.eat_sym('*') {
                let rhs = self.power()?;
                acc = acc.mul(&rhs).ok_or(ParseError { span: start, kind: ParseErrorKind::NonQuadratic })?;
            } else if self.eat_sym('/') {
                let d = self.int()?;
                if d == 0 {
                    return Err(ParseError { span: start, kind: ParseErrorKind::NonQuadratic });
                }
                acc = acc.scale(Ratio::new(1, d));
            } else if matches!(self.peek(), Tok::Ident(s) if s != "q" && !is_keyword(s))
                || (self.is_sym('(') && !self.starts_pochhammer())
            {
                let rhs = self.power()?;
                acc = acc.mul(&rhs).ok_or(ParseError { span: start, kind: ParseErrorKind::NonQuadratic })?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn starts_pochhammer(&self) -> bool {
        matches!(self.peek_at(1), Tok::Ident(s) if s == "q")
            || (*self.peek_at(1) == Tok::Sym('-') && matches!(self.peek_at(2), Tok::Ident(s) if s == "q"))
    }

    // power := atom ['^' int]
    fn power(&mut self) -> PResult<Poly> {
        let base = self.atom()?;
        if self.is_sym('^') {
            let start = self.span();
            self.bump();
            let e = self.int()?;
            let mut acc = Poly::constant(1);
            for _ in 0..e {
                acc = acc.mul(&base).ok_or(ParseError { span: start, kind: ParseErrorKind::NonQuadratic })?;
            }
            return Ok(acc);
        }
        Ok(base)
    }

    // atom := int | ident | '(' expr ')' | '{' expr '}' | binom '(' expr ',' int ')'
    fn atom(&mut self) -> PResult<Poly> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Poly::constant(v))
            }
            Tok::Ident(s) if s == "binom" => {
                self.bump();
                self.expect_sym('(')?;
                let top = self.expr()?;
                self.expect_sym(',')?;
                let k = self.int()?;
                self.expect_sym(')')?;
                match k {
                    0 => Ok(Poly::constant(1)),
                    1 => Ok(top),
                    2 => {
                        let minus_one = top.clone().add(&Poly::constant(1), -1);
                        let sq = top
                            .mul(&minus_one)
                            .ok_or(ParseError { span: start, kind: ParseErrorKind::NonQuadratic })?;
                        Ok(sq.scale(Ratio::new(1, 2)))
                    }
                    _ => Err(ParseError { span: start, kind: ParseErrorKind::NonQuadratic }),
                }
            }
            Tok::Ident(s) => {
                self.bump();
                let vars = self.vars.expect("variables are declared before expressions");
                match vars.lookup(&s) {
                    Some(v) => Ok(Poly::var(v)),
                    None => Err(ParseError { span: start, kind: ParseErrorKind::Undeclared(s) }),
                }
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Sym('{') => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym('}')?;
                Ok(e)
            }
            _ => self.expected("expression"),
        }
    }

    fn affine(&mut self) -> PResult<AffineExpr> {
        let start = self.span();
        let p = self.expr()?;
        p.to_affine().ok_or(ParseError { span: start, kind: ParseErrorKind::NonAffine })
    }

    fn braced_affine(&mut self) -> PResult<AffineExpr> {
        if self.eat_sym('{') {
            let e = self.affine()?;
            self.expect_sym('}')?;
            Ok(e)
        } else {
            let start = self.span();
            self.atom()?.to_affine().ok_or(ParseError { span: start, kind: ParseErrorKind::NonAffine })
        }
    }

    fn step(&mut self) -> PResult<u32> {
        let start = self.span();
        let braced = self.eat_sym('{');
        let k = self.int()?;
        if braced {
            self.expect_sym('}')?;
        }
        u32::try_from(k)
            .ok()
            .filter(|k| *k >= 1)
            .ok_or(ParseError { span: start, kind: ParseErrorKind::BadStep })
    }

    fn subscript(&mut self) -> PResult<Subscript> {
        if self.eat_sym('_') {
            Ok(Subscript::Finite(self.braced_affine()?))
        } else {
            Ok(Subscript::Infinite)
        }
    }

    fn coeff(&mut self) -> PResult<SumCoefficient> {
        if *self.peek() == Tok::Int(1) && self.toks.get(self.pos + 1).map(|t| &t.0) == Some(&Tok::Sym(';')) {
            self.bump();
            return Ok(SumCoefficient::one());
        }
        let mut out = SumCoefficient::one();
        let mut any = false;
        if self.is_sym('(') {
            self.bump();
            self.expect_sym('-')?;
            if self.int()? != 1 {
                return self.expected("`(-1)`");
            }
            self.expect_sym(')')?;
            self.expect_sym('^')?;
            out.sign = Parity::from_affine(&self.braced_affine()?);
            self.eat_sym('*');
            any = true;
        }
        if self.is_kw("q") {
            self.bump();
            self.expect_sym('^')?;
            let start = self.span();
            let p = if self.eat_sym('{') {
                let p = self.expr()?;
                self.expect_sym('}')?;
                p
            } else {
                self.atom()?
            };
            out.q_exp = p.to_quad().ok_or(ParseError { span: start, kind: ParseErrorKind::NonQuadratic })?;
            any = true;
        }
        if !any {
            return self.expected("coefficient");
        }
        Ok(out)
    }

    fn factor(&mut self) -> PResult<Factor> {
        if self.eat_sym('[') {
            let arg = self.affine()?;
            let step = if self.eat_sym(';') { self.step()? } else { 1 };
            self.expect_sym(']')?;
            let sub = self.subscript()?;
            return Ok(Factor::Bracket(SquareBracket { arg, step, sub }));
        }
        if self.eat_sym('(') {
            let negated = self.eat_sym('-');
            self.expect_kw("q")?;
            self.expect_sym('^')?;
            let base_exp = self.braced_affine()?;
            self.expect_sym(';')?;
            self.expect_kw("q")?;
            let step = if self.eat_sym('^') { self.step()? } else { 1 };
            self.expect_sym(')')?;
            let sub = self.subscript()?;
            return Ok(Factor::Pochhammer { base_exp, step, sub, negated });
        }
        self.expected("`[` or `(`")
    }

    fn factors(&mut self, spans: &mut Vec<Span>) -> PResult<Vec<Factor>> {
        if *self.peek() == Tok::Int(1) {
            self.bump();
            return Ok(vec![]);
        }
        let mut out = Vec::new();
        while self.is_sym('[') || self.is_sym('(') {
            spans.push(self.span());
            out.push(self.factor()?);
        }
        if out.is_empty() {
            return self.err(ParseErrorKind::EmptyFraction);
        }
        Ok(out)
    }

    fn fraction(&mut self, spans: &mut Vec<Span>) -> PResult<FactorList> {
        let num = self.factors(spans)?;
        let den = if self.eat_sym('/') { self.factors(spans)? } else { vec![] };
        Ok(FactorList { num, den })
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "vars" | "sum" | "coeff" | "lhs" | "rhs" | "q" | "binom")
}

/// Parses a document. Variables must be declared before use.
pub fn parse(src: &str) -> Result<InputDocument, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, vars: None };
    p.expect_kw("vars")?;
    let mut params = Vec::new();
    while !p.is_kw("sum") {
        let span = p.span();
        let name = p.ident()?;
        if is_keyword(&name) {
            return Err(ParseError { span, kind: ParseErrorKind::ReservedName });
        }
        if params.contains(&name) {
            return Err(ParseError { span, kind: ParseErrorKind::Duplicate(name) });
        }
        params.push(name);
    }
    p.expect_kw("sum")?;
    let span = p.span();
    let summation = p.ident()?;
    if is_keyword(&summation) {
        return Err(ParseError { span, kind: ParseErrorKind::ReservedName });
    }
    let vars = VarTable::new(&params, &summation)
        .map_err(|_| ParseError { span, kind: ParseErrorKind::Duplicate(summation.clone()) })?;
    p.expect_sym(';')?;
    let mut p = Parser { toks: p.toks, pos: p.pos, vars: Some(&vars) };
    p.expect_kw("coeff")?;
    let coeff = p.coeff()?;
    p.expect_sym(';')?;
    let mut spans = Vec::new();
    p.expect_kw("lhs")?;
    let lhs = p.fraction(&mut spans)?;
    p.expect_sym(';')?;
    p.expect_kw("rhs")?;
    let rhs = p.fraction(&mut spans)?;
    p.expect_sym(';')?;
    if *p.peek() != Tok::Eof {
        return p.expected("end of input");
    }
    Ok(InputDocument { vars: vars.clone(), coeff, lhs, rhs, spans })
}

/// True when every coefficient and the constant are `<= 0`, not all zero:
/// the subscript is written as a negative quantity.
fn is_negative_subscript(e: &AffineExpr) -> bool {
    !e.is_zero() && e.constant_term() <= 0 && e.terms().all(|(_, c)| c <= 0)
}

fn factor_to_fraction(f: &Factor) -> Result<BracketFraction, QalgError> {
    match f {
        Factor::Bracket(b) => match &b.sub {
            // (a;q)_{-s} = 1/(a q^{-s}; q)_s
            Subscript::Finite(s) if is_negative_subscript(s) => {
                let pos = -s;
                Ok(BracketFraction::new(vec![], vec![SquareBracket::finite(&b.arg - &pos, b.step, pos)]))
            }
            _ => Ok(BracketFraction::of(b.clone())),
        },
        Factor::Pochhammer { base_exp, step, sub, negated } => {
            let kind = if *negated { PochhammerKind::Negated } else { PochhammerKind::Plain };
            pochhammer_to_bracket(base_exp, *step, sub, kind)
        }
    }
}

impl InputDocument {
    /// The bracket identity, with Pochhammer symbols and negative subscripts
    /// rewritten, checked for balance.
    pub fn to_identity(&self) -> Result<HypergeometricIdentity, ParseError> {
        let mut spans = self.spans.iter().copied();
        let mut build = |list: &FactorList| -> Result<BracketFraction, ParseError> {
            let mut acc = BracketFraction::one();
            for (f, inverted) in list.num.iter().map(|f| (f, false)).chain(list.den.iter().map(|f| (f, true))) {
                let span = spans.next().unwrap_or_default();
                let frac = factor_to_fraction(f).map_err(|e| ParseError { span, kind: e.into() })?;
                acc = if inverted { acc.div(&frac) } else { acc.mul(&frac) };
            }
            Ok(acc)
        };
        let sum_fraction = build(&self.lhs)?;
        let product_fraction = build(&self.rhs)?;
        let id = HypergeometricIdentity { vars: self.vars.clone(), coeff: self.coeff.clone(), sum_fraction, product_fraction };
        id.validate().map_err(|e| ParseError { span: Span { line: 1, col: 1 }, kind: e.into() })?;
        Ok(id)
    }

    /// Canonical source text; parsing it gives back an equal document.
    pub fn render(&self) -> String {
        let v = &self.vars;
        let params: Vec<String> = v.params().map(|p| v.name(p).to_string()).collect();
        let mut out = format!("vars {} sum {};\n", params.join(" "), v.name(v.summation()));
        let mut coeff = Vec::new();
        if !self.coeff.sign.is_even() {
            coeff.push(format!("(-1)^{{{}}}", self.coeff.sign.expr().display(v)));
        }
        if !self.coeff.q_exp.is_zero() {
            coeff.push(format!("q^{{{}}}", self.coeff.q_exp.display(v)));
        }
        if coeff.is_empty() {
            coeff.push("1".into());
        }
        out.push_str(&format!("coeff {};\n", coeff.join(" ")));
        out.push_str(&format!("lhs {};\n", render_list(&self.lhs, v)));
        out.push_str(&format!("rhs {};\n", render_list(&self.rhs, v)));
        out
    }
}

fn render_factor(f: &Factor, v: &VarTable) -> String {
    let sub = |s: &Subscript| match s {
        Subscript::Infinite => String::new(),
        Subscript::Finite(e) => format!("_{{{}}}", e.display(v)),
    };
    match f {
        Factor::Bracket(b) => {
            let step = if b.step == 1 { String::new() } else { format!(";{}", b.step) };
            format!("[{}{step}]{}", b.arg.display(v), sub(&b.sub))
        }
        Factor::Pochhammer { base_exp, step, sub: s, negated } => {
            let sign = if *negated { "-" } else { "" };
            let base = if *step == 1 { "q".to_string() } else { format!("q^{{{step}}}") };
            format!("({sign}q^{{{}}};{base}){}", base_exp.display(v), sub(s))
        }
    }
}

fn render_list(list: &FactorList, v: &VarTable) -> String {
    let side = |fs: &[Factor]| {
        if fs.is_empty() {
            "1".to_string()
        } else {
            fs.iter().map(|f| render_factor(f, v)).collect::<Vec<_>>().join(" ")
        }
    };
    if list.den.is_empty() {
        side(&list.num)
    } else {
        format!("{} / {}", side(&list.num), side(&list.den))
    }
}

//! Exact Laurent polynomials in `q` with arbitrary-precision coefficients, and
//! memoized Gaussian binomial expansion.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// `Σ coeffs[i]·q^(offset+i)`. Normalized: no zero coefficient at either end,
/// and the zero polynomial has no coefficients and offset 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct QPolynomial {
    offset: i64,
    coeffs: Vec<BigInt>,
}

impl QPolynomial {
    pub fn zero() -> Self {
        QPolynomial::default()
    }

    pub fn one() -> Self {
        QPolynomial::monomial(BigInt::one(), 0)
    }

    pub fn monomial(c: BigInt, exp: i64) -> Self {
        QPolynomial::from_coeffs(exp, vec![c])
    }

    /// `q^exp`.
    pub fn q_pow(exp: i64) -> Self {
        QPolynomial::monomial(BigInt::one(), exp)
    }

    /// `1 - q^e`.
    pub fn one_minus_q_pow(e: i64) -> Self {
        &QPolynomial::one() - &QPolynomial::q_pow(e)
    }

    pub fn from_coeffs(offset: i64, coeffs: Vec<BigInt>) -> Self {
        let mut p = QPolynomial { offset, coeffs };
        p.normalize();
        p
    }

    pub fn from_i64s(offset: i64, coeffs: &[i64]) -> Self {
        QPolynomial::from_coeffs(offset, coeffs.iter().map(|c| BigInt::from(*c)).collect())
    }

    fn normalize(&mut self) {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.offset += lead as i64;
        }
        if self.coeffs.is_empty() {
            self.offset = 0;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest exponent with a nonzero coefficient.
    pub fn low_degree(&self) -> Option<i64> {
        (!self.is_zero()).then_some(self.offset)
    }

    pub fn degree(&self) -> Option<i64> {
        (!self.is_zero()).then(|| self.offset + self.coeffs.len() as i64 - 1)
    }

    pub fn coeff(&self, exp: i64) -> BigInt {
        let i = exp - self.offset;
        if i < 0 || i >= self.coeffs.len() as i64 {
            BigInt::zero()
        } else {
            self.coeffs[i as usize].clone()
        }
    }

    /// Nonzero `(exponent, coefficient)` pairs in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &BigInt)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (self.offset + i as i64, c))
    }

    pub fn shift(&self, by: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        QPolynomial { offset: self.offset + by, coeffs: self.coeffs.clone() }
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        QPolynomial::from_coeffs(self.offset, self.coeffs.iter().map(|c| c * k).collect())
    }

    /// Substitutes `q -> q^k` for `k >= 1`.
    pub fn substitute_power(&self, k: u32) -> Self {
        if self.is_zero() || k == 1 {
            return self.clone();
        }
        let k = k as usize;
        let mut coeffs = vec![BigInt::zero(); (self.coeffs.len() - 1) * k + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i * k] = c.clone();
        }
        QPolynomial::from_coeffs(self.offset * k as i64, coeffs)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = QPolynomial::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// `∏_{j=0}^{len-1} (1 - q^(start + step·j))`, the finite q-Pochhammer
    /// product. `len <= 0` gives the empty product.
    pub fn pochhammer(start: i64, step: i64, len: i64) -> Self {
        let mut acc = QPolynomial::one();
        for j in 0..len.max(0) {
            acc = &acc * &QPolynomial::one_minus_q_pow(start + step * j);
        }
        acc
    }

    /// Exact quotient, or `None` when `divisor` does not divide `self` over
    /// the integers (or is zero).
    pub fn div_exact(&self, divisor: &QPolynomial) -> Option<QPolynomial> {
        if divisor.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(QPolynomial::zero());
        }
        let d = &divisor.coeffs;
        let dl = d.len();
        let lead = &d[dl - 1];
        let mut rem = self.coeffs.clone();
        if rem.len() < dl {
            return None;
        }
        let qlen = rem.len() - dl + 1;
        let mut quot = vec![BigInt::zero(); qlen];
        for i in (0..qlen).rev() {
            let top = &rem[i + dl - 1];
            if top.is_zero() {
                continue;
            }
            let (c, r) = top.div_rem(lead);
            if !r.is_zero() {
                return None;
            }
            for (j, dc) in d.iter().enumerate() {
                rem[i + j] -= &c * dc;
            }
            quot[i] = c;
        }
        if rem.iter().any(|c| !c.is_zero()) {
            return None;
        }
        Some(QPolynomial::from_coeffs(self.offset - divisor.offset, quot))
    }

    /// Value at an integer `q` (negative powers need `q = ±1`).
    pub fn eval_at(&self, q: &BigInt) -> Option<num_rational::BigRational> {
        if self.is_zero() {
            return Some(num_rational::BigRational::zero());
        }
        if q.is_zero() && self.offset < 0 {
            return None;
        }
        let mut acc = num_rational::BigRational::zero();
        let qr = num_rational::BigRational::from_integer(q.clone());
        for (e, c) in self.terms() {
            let p = if e >= 0 {
                num_rational::BigRational::from_integer(num_traits::pow(q.clone(), e as usize))
            } else {
                qr.recip().pow(-e as i32)
            };
            acc += p * c;
        }
        Some(acc)
    }
}

impl Add for &QPolynomial {
    type Output = QPolynomial;
    fn add(self, rhs: &QPolynomial) -> QPolynomial {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let lo = self.offset.min(rhs.offset);
        let hi = self.degree().unwrap().max(rhs.degree().unwrap());
        let mut coeffs = vec![BigInt::zero(); (hi - lo + 1) as usize];
        for p in [self, rhs] {
            for (i, c) in p.coeffs.iter().enumerate() {
                coeffs[(p.offset - lo) as usize + i] += c;
            }
        }
        QPolynomial::from_coeffs(lo, coeffs)
    }
}

impl Sub for &QPolynomial {
    type Output = QPolynomial;
    fn sub(self, rhs: &QPolynomial) -> QPolynomial {
        self + &(-rhs)
    }
}

impl Neg for &QPolynomial {
    type Output = QPolynomial;
    fn neg(self) -> QPolynomial {
        QPolynomial { offset: self.offset, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Mul for &QPolynomial {
    type Output = QPolynomial;
    fn mul(self, rhs: &QPolynomial) -> QPolynomial {
        if self.is_zero() || rhs.is_zero() {
            return QPolynomial::zero();
        }
        let mut coeffs = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        QPolynomial::from_coeffs(self.offset + rhs.offset, coeffs)
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for QPolynomial {
            type Output = QPolynomial;
            fn $m(self, rhs: QPolynomial) -> QPolynomial {
                (&self).$m(&rhs)
            }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl fmt::Display for QPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms() {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            first = false;
            let unit = mag.is_one();
            match e {
                0 => write!(f, "{mag}")?,
                1 if unit => write!(f, "q")?,
                1 => write!(f, "{mag}q")?,
                _ if unit => write!(f, "q^{e}")?,
                _ => write!(f, "{mag}q^{e}")?,
            }
        }
        Ok(())
    }
}

/// Memo of Gaussian binomial expansions keyed on `(top, bottom, step)`.
#[derive(Debug, Default)]
pub struct BinomialCache {
    rows: Vec<Vec<QPolynomial>>,
    stepped: HashMap<(i64, i64, u32), QPolynomial>,
}

impl BinomialCache {
    pub fn new() -> Self {
        BinomialCache::default()
    }

    /// `binom(top, bottom)_{q^step}`, zero when `bottom < 0` or
    /// `top - bottom < 0`.
    pub fn get(&mut self, top: i64, bottom: i64, step: u32) -> QPolynomial {
        if bottom < 0 || top - bottom < 0 {
            return QPolynomial::zero();
        }
        // symmetric, so keep the smaller bottom
        let bottom = bottom.min(top - bottom);
        if step == 1 {
            return self.base(top, bottom).clone();
        }
        if let Some(p) = self.stepped.get(&(top, bottom, step)) {
            return p.clone();
        }
        let p = self.base(top, bottom).substitute_power(step);
        self.stepped.insert((top, bottom, step), p.clone());
        p
    }

    fn base(&mut self, top: i64, bottom: i64) -> &QPolynomial {
        let top = top as usize;
        while self.rows.len() <= top {
            let n = self.rows.len();
            let row = if n == 0 {
                vec![QPolynomial::one()]
            } else {
                let prev = &self.rows[n - 1];
                (0..=n)
                    .map(|k| {
                        if k == 0 || k == n {
                            return QPolynomial::one();
                        }
                        // binom(n,k) = binom(n-1,k-1) + q^k binom(n-1,k)
                        &prev[k - 1] + &prev[k].shift(k as i64)
                    })
                    .collect()
            };
            self.rows.push(row);
        }
        &self.rows[top][bottom as usize]
    }
}

thread_local! {
    static CACHE: RefCell<BinomialCache> = RefCell::new(BinomialCache::new());
}

/// Gaussian binomial via a per-thread cache.
pub fn gaussian_binomial(top: i64, bottom: i64, step: u32) -> QPolynomial {
    CACHE.with(|c| c.borrow_mut().get(top, bottom, step))
}

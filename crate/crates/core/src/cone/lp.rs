//! Exact two-phase simplex with Bland's rule for the single question the
//! cone kernel asks: given columns `a_0, a_1, ..., a_p` and a target `u`,
//! maximize `x_0` subject to `Σ x_j a_j = u`, `x >= 0`.

use num_traits::{One, Signed, Zero};

use crate::expr::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    /// A feasible point with `x_0 > 0`.
    Positive { x: Vec<Rational> },
    /// Row multipliers `y` with `y·a_j >= 0` for every column and either
    /// `y·u < 0` (infeasible) or `y·a_0 >= 1` and `y·u = 0` (optimum is zero).
    Separated { y: Vec<Rational> },
}

struct Tableau {
    rows: usize,
    cols: usize, // real columns; artificials follow
    t: Vec<Vec<Rational>>, // rows × (cols + rows + 1), last entry is the rhs
    basis: Vec<usize>,
    flip: Vec<bool>,
}

impl Tableau {
    fn new(columns: &[Vec<Rational>], u: &[Rational]) -> Self {
        let rows = u.len();
        let cols = columns.len();
        let width = cols + rows + 1;
        let mut t = vec![vec![Rational::zero(); width]; rows];
        let mut flip = vec![false; rows];
        for i in 0..rows {
            flip[i] = u[i].is_negative();
            let s = if flip[i] { -Rational::one() } else { Rational::one() };
            for (j, col) in columns.iter().enumerate() {
                t[i][j] = &col[i] * &s;
            }
            t[i][cols + i] = Rational::one();
            t[i][width - 1] = &u[i] * &s;
        }
        Tableau { rows, cols, t, basis: (cols..cols + rows).collect(), flip }
    }

    fn width(&self) -> usize {
        self.cols + self.rows + 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c].clone();
        for x in self.t[r].iter_mut() {
            *x /= &p;
        }
        let pivot_row = self.t[r].clone();
        for i in 0..self.rows {
            if i == r || self.t[i][c].is_zero() {
                continue;
            }
            let f = self.t[i][c].clone();
            for (x, pr) in self.t[i].iter_mut().zip(&pivot_row) {
                if !pr.is_zero() {
                    *x -= &f * pr;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Duals `π = c_B B^{-1}`, read off the artificial block.
    fn duals(&self, cost: &[Rational]) -> Vec<Rational> {
        let mut pi = vec![Rational::zero(); self.rows];
        for (i, b) in self.basis.iter().enumerate() {
            let cb = &cost[*b];
            if cb.is_zero() {
                continue;
            }
            for (k, p) in pi.iter_mut().enumerate() {
                *p += cb * &self.t[i][self.cols + k];
            }
        }
        pi
    }

    /// `c_j - c_B · (tableau column j)`.
    fn reduced_cost(&self, cost: &[Rational], j: usize) -> Rational {
        let mut r = cost[j].clone();
        for (i, b) in self.basis.iter().enumerate() {
            if !cost[*b].is_zero() {
                r -= &cost[*b] * &self.t[i][j];
            }
        }
        r
    }

    /// Minimizes `cost·x` over columns `< allowed`. Returns the entering
    /// column when the problem is unbounded.
    fn minimize(&mut self, cost: &[Rational], allowed: usize) -> Option<usize> {
        loop {
            let entering = (0..allowed)
                .filter(|j| !self.basis.contains(j))
                .find(|&j| self.reduced_cost(cost, j).is_negative());
            let c = entering?;
            let rhs = self.width() - 1;
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.rows {
                let a = &self.t[i][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.t[i][rhs] / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return Some(c),
            }
        }
    }

    fn point(&self) -> Vec<Rational> {
        let rhs = self.width() - 1;
        let mut x = vec![Rational::zero(); self.cols];
        for (i, b) in self.basis.iter().enumerate() {
            if *b < self.cols {
                x[*b] = self.t[i][rhs].clone();
            }
        }
        x
    }

    fn unflip(&self, pi: &[Rational]) -> Vec<Rational> {
        pi.iter()
            .zip(&self.flip)
            .map(|(p, f)| if *f { p.clone() } else { -p })
            .collect()
    }
}

/// Decides whether `u` has a representation `Σ x_j a_j` with `x >= 0`
/// and `x_0 > 0`. `columns[0]` is `a_0`.
pub fn maximize_first(columns: &[Vec<Rational>], u: &[Rational]) -> LpOutcome {
    let mut tab = Tableau::new(columns, u);
    let n = tab.cols;
    let total = n + tab.rows;

    let mut phase1 = vec![Rational::zero(); total];
    for c in phase1.iter_mut().skip(n) {
        *c = Rational::one();
    }
    tab.minimize(&phase1, n);
    let rhs = tab.width() - 1;
    let infeasibility: Rational = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, b)| **b >= n)
        .map(|(i, _)| tab.t[i][rhs].clone())
        .sum();
    if infeasibility.is_positive() {
        let pi = tab.duals(&phase1);
        return LpOutcome::Separated { y: tab.unflip(&pi) };
    }

    // drive zero-level artificials out so phase 2 can never revive them;
    // rows where that is impossible are redundant
    for i in 0..tab.rows {
        if tab.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| !tab.t[i][j].is_zero()) {
                tab.pivot(i, j);
            }
        }
    }

    let mut phase2 = vec![Rational::zero(); total];
    phase2[0] = -Rational::one();
    if let Some(c) = tab.minimize(&phase2, n) {
        // unbounded ray: step one unit along the entering column
        let mut x = tab.point();
        x[c] += Rational::one();
        for (i, b) in tab.basis.iter().enumerate() {
            if *b < n {
                x[*b] -= &tab.t[i][c];
            }
        }
        debug_assert!(x[0].is_positive());
        return LpOutcome::Positive { x };
    }
    let x = tab.point();
    if x[0].is_positive() {
        LpOutcome::Positive { x }
    } else {
        let pi = tab.duals(&phase2);
        LpOutcome::Separated { y: tab.unflip(&pi) }
    }
}

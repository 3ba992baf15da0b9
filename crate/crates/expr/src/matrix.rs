//! Dense matrices over the rational function field and exact row reduction.
//!
//! Ranks, kernels and solutions are generic: they hold at every point off a
//! proper algebraic subset.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::ExprError;
use crate::poly::Rational;
use crate::rational::RationalExpr;
use crate::var::Var;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExprMatrix {
    rows: usize,
    cols: usize,
    data: Vec<RationalExpr>,
}

/// Result of [`ExprMatrix::solve`]: `particular` has one column per
/// right-hand side, `nullspace` spans the kernel of the coefficient matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSolution {
    pub particular: ExprMatrix,
    pub nullspace: Vec<Vec<RationalExpr>>,
}

impl ExprMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ExprMatrix {
            rows,
            cols,
            data: vec![RationalExpr::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, RationalExpr::one());
        }
        m
    }

    /// Builds a matrix from rows; `cols` fixes the width when `rows` is empty.
    pub fn from_rows(rows: Vec<Vec<RationalExpr>>, cols: usize) -> Result<Self, ExprError> {
        let nrows = rows.len();
        let mut data = Vec::with_capacity(nrows * cols);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != cols {
                return Err(ExprError::Shape(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend(r);
        }
        Ok(ExprMatrix {
            rows: nrows,
            cols,
            data,
        })
    }

    pub fn from_columns(columns: &[Vec<RationalExpr>], rows: usize) -> Result<Self, ExprError> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(ExprError::Shape(format!(
                    "column {j} has {} entries, expected {rows}",
                    c.len()
                )));
            }
            for (i, e) in c.iter().enumerate() {
                m.set(i, j, e.clone());
            }
        }
        Ok(m)
    }

    /// Jacobian of `funcs` with respect to `vars`; one row per function.
    pub fn jacobian(funcs: &[RationalExpr], vars: &[Var]) -> Self {
        let mut m = Self::zeros(funcs.len(), vars.len());
        for (i, f) in funcs.iter().enumerate() {
            for (j, v) in vars.iter().enumerate() {
                m.set(i, j, f.diff(v));
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &RationalExpr {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, e: RationalExpr) {
        self.data[r * self.cols + c] = e;
    }

    pub fn row(&self, r: usize) -> &[RationalExpr] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[RationalExpr]> {
        (0..self.rows).map(move |r| self.row(r))
    }

    pub fn column(&self, c: usize) -> Vec<RationalExpr> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.is_zero())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut m = Self::zeros(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                m.set(i, j, self.get(r, c).clone());
            }
        }
        m
    }

    pub fn mul(&self, rhs: &ExprMatrix) -> Result<ExprMatrix, ExprError> {
        if self.cols != rhs.rows {
            return Err(ExprError::Shape(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = RationalExpr::zero();
                for k in 0..self.cols {
                    let (a, b) = (self.get(i, k), rhs.get(k, j));
                    if !a.is_zero() && !b.is_zero() {
                        acc = &acc + &(a * b);
                    }
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[RationalExpr]) -> Result<Vec<RationalExpr>, ExprError> {
        if v.len() != self.cols {
            return Err(ExprError::Shape(format!(
                "{}x{} times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok(self
            .rows()
            .map(|row| {
                row.iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// Applies `f` to every entry.
    pub fn try_map<E, F>(&self, mut f: F) -> Result<ExprMatrix, E>
    where
        F: FnMut(&RationalExpr) -> Result<RationalExpr, E>,
    {
        let data = self
            .data
            .iter()
            .map(&mut f)
            .collect::<Result<Vec<_>, E>>()?;
        Ok(ExprMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Evaluates every entry; `None` if any entry has a pole at the point.
    pub fn eval(&self, point: &BTreeMap<Var, Rational>) -> Option<Vec<Vec<Rational>>> {
        self.rows()
            .map(|row| row.iter().map(|e| e.eval(point)).collect())
            .collect()
    }

    /// Reduced row echelon form and its pivot columns.
    ///
    /// The reduced form is unique, so the pivot *row* is picked by
    /// expression size only to keep intermediate results small.
    pub fn rref(&self) -> (ExprMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows)
                .filter(|&i| !m.get(i, c).is_zero())
                .min_by_key(|&i| (expr_size(m.get(i, c)), i))
            else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m.get(r, c).recip().expect("pivot is nonzero");
            for j in c..m.cols {
                let e = m.get(r, j);
                if !e.is_zero() {
                    let scaled = e * &inv;
                    m.set(r, j, scaled);
                }
            }
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let factor = m.get(i, c).clone();
                if factor.is_zero() {
                    continue;
                }
                for j in c..m.cols {
                    let pr = m.get(r, j);
                    if pr.is_zero() {
                        continue;
                    }
                    let upd = m.get(i, j) - &(&factor * pr);
                    m.set(i, j, upd);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Rank over the rational function field.
    pub fn generic_rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Kernel basis; one vector per free column, with a 1 in that column.
    pub fn nullspace(&self) -> Vec<Vec<RationalExpr>> {
        let (r, pivots) = self.rref();
        nullspace_from_rref(&r, &pivots, self.cols)
    }

    /// Solves `self * X = rhs`.
    pub fn solve(&self, rhs: &ExprMatrix) -> Result<LinearSolution, ExprError> {
        if rhs.rows != self.rows {
            return Err(ExprError::Shape(format!(
                "coefficient matrix has {} rows, right-hand side {}",
                self.rows, rhs.rows
            )));
        }
        let mut aug = Self::zeros(self.rows, self.cols + rhs.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j).clone());
            }
            for j in 0..rhs.cols {
                aug.set(i, self.cols + j, rhs.get(i, j).clone());
            }
        }
        let (red, pivots) = aug.rref();
        if pivots.iter().any(|&p| p >= self.cols) {
            let certificate = self
                .transpose()
                .nullspace()
                .into_iter()
                .find(|y| {
                    (0..rhs.cols).any(|j| {
                        !y.iter()
                            .zip(rhs.column(j))
                            .map(|(a, b)| a * &b)
                            .sum::<RationalExpr>()
                            .is_zero()
                    })
                })
                .expect("an inconsistent system has a separating left-null vector");
            return Err(ExprError::Infeasible { certificate });
        }
        let mut particular = Self::zeros(self.cols, rhs.cols);
        for (i, &p) in pivots.iter().enumerate() {
            for j in 0..rhs.cols {
                particular.set(p, j, red.get(i, self.cols + j).clone());
            }
        }
        let coeff_pivots: Vec<usize> = pivots.clone();
        let mut coeff = Self::zeros(red.rows, self.cols);
        for i in 0..red.rows {
            for j in 0..self.cols {
                coeff.set(i, j, red.get(i, j).clone());
            }
        }
        Ok(LinearSolution {
            particular,
            nullspace: nullspace_from_rref(&coeff, &coeff_pivots, self.cols),
        })
    }
}

fn nullspace_from_rref(r: &ExprMatrix, pivots: &[usize], cols: usize) -> Vec<Vec<RationalExpr>> {
    let mut out = Vec::new();
    for free in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![RationalExpr::zero(); cols];
        v[free] = RationalExpr::one();
        for (i, &p) in pivots.iter().enumerate() {
            v[p] = -r.get(i, free);
        }
        out.push(v);
    }
    out
}

fn expr_size(e: &RationalExpr) -> usize {
    e.numer().nterms() + e.denom().nterms()
}

/// Rank of `m` over the function field.
pub fn generic_rank(m: &ExprMatrix) -> usize {
    m.generic_rank()
}

/// Solves `m * X = rhs` over the function field.
pub fn solve_linear(m: &ExprMatrix, rhs: &ExprMatrix) -> Result<LinearSolution, ExprError> {
    m.solve(rhs)
}

impl fmt::Display for ExprMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(|e| e.to_string()).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for ExprMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExprMatrix {}x{}\n{self}", self.rows, self.cols)
    }
}

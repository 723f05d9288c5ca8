//! Exact rational simplex for packing LPs of the form
//!
//! ```text
//!     max  sum(lambda)   s.t.  A lambda <= b,  lambda >= 0
//! ```
//!
//! where `A` has small nonnegative integer entries and `b >= 0` is
//! integer. This is a revised primal simplex with integer pivoting: the
//! state is the adjugate `M = det(B) * B^-1` and the determinant `D` of
//! the current basis, both exact integers. Every pivot updates `M` with
//! the Bareiss two-by-two identity, whose division by the previous
//! determinant is exact, so no rational reduction (gcd) happens anywhere
//! in the hot loop. Columns are stored sparsely and may be added between
//! solves — adding a column never disturbs primal feasibility of the
//! current basis, which is exactly what column generation needs.
//!
//! The entering rule is Dantzig's (largest reduced cost) while pivots make
//! progress, with Bland's rule (lowest improving variable index enters,
//! lowest-index basic variable leaves on ratio ties) as the anti-cycling
//! safeguard: a long degenerate streak flips the loop into Bland mode,
//! which with exact arithmetic cannot cycle, and any nondegenerate pivot
//! flips it back. There are no tolerances anywhere; optimality means every
//! reduced cost is exactly nonpositive.

use num::rational::BigRational;
use num::{BigInt, One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimplexError {
    #[error("LP is unbounded, which a capacity-constrained packing cannot be")]
    Unbounded,
    #[error("pivot limit of {0} exceeded")]
    PivotLimit(usize),
}

/// A structural column: strictly increasing `(row, coefficient)` pairs
/// with positive integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SparseColumn {
    entries: Vec<(usize, u32)>,
}

impl SparseColumn {
    pub fn new(entries: Vec<(usize, u32)>) -> SparseColumn {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(_, c)| c > 0));
        SparseColumn { entries }
    }

    pub fn entries(&self) -> &[(usize, u32)] {
        &self.entries
    }

    fn dot(&self, dense: &[BigInt]) -> BigInt {
        let mut acc = BigInt::zero();
        for &(row, coeff) in &self.entries {
            match coeff {
                1 => acc += &dense[row],
                2 => acc += &dense[row] * 2,
                c => acc += &dense[row] * BigInt::from(c),
            }
        }
        acc
    }
}

/// Variable identifiers with a fixed total order: structural variables in
/// insertion order first, then one slack per row. The order is what makes
/// Bland's rule well-defined while columns keep arriving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Var {
    Structural(usize),
    Slack(usize),
}

#[derive(Debug, Clone)]
pub struct PackingLp {
    rhs: Vec<BigInt>,
    columns: Vec<SparseColumn>,
    basis: Vec<Var>,
    /// Adjugate of the basis matrix: `madj = det * B^-1`, exact integers.
    madj: Vec<Vec<BigInt>>,
    /// Determinant of the basis matrix; nonzero, either sign.
    det: BigInt,
    /// Basic variable values, scaled: `x_i = xnum_i / det`.
    xnum: Vec<BigInt>,
    structural_in_basis: Vec<bool>,
    slack_in_basis: Vec<bool>,
    pivots: usize,
}

impl PackingLp {
    /// Start from the all-slack basis, which is feasible because `b >= 0`.
    pub fn new(rhs: Vec<BigInt>) -> PackingLp {
        let m = rhs.len();
        debug_assert!(rhs.iter().all(|b| !b.is_negative()));
        let madj = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        if i == j {
                            BigInt::one()
                        } else {
                            BigInt::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        PackingLp {
            xnum: rhs.clone(),
            rhs,
            columns: Vec::new(),
            basis: (0..m).map(Var::Slack).collect(),
            madj,
            det: BigInt::one(),
            structural_in_basis: Vec::new(),
            slack_in_basis: vec![true; m],
            pivots: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn pivot_count(&self) -> usize {
        self.pivots
    }

    pub fn add_column(&mut self, column: SparseColumn) -> usize {
        debug_assert!(column.entries.iter().all(|&(row, _)| row < self.rows()));
        self.columns.push(column);
        self.structural_in_basis.push(false);
        self.columns.len() - 1
    }

    fn column_dense(&self, var: Var) -> Vec<BigInt> {
        let m = self.rows();
        let mut dense = vec![BigInt::zero(); m];
        match var {
            Var::Structural(j) => {
                for &(row, coeff) in &self.columns[j].entries {
                    dense[row] = BigInt::from(coeff);
                }
            }
            Var::Slack(i) => dense[i] = BigInt::one(),
        }
        dense
    }

    /// Scaled simplex multipliers: `y_j = ynum_j / det` with the sign of
    /// `det` folded in so that the returned pair has a positive
    /// denominator.
    fn multipliers_scaled(&self) -> (Vec<BigInt>, BigInt) {
        let m = self.rows();
        let mut ynum = vec![BigInt::zero(); m];
        for (i, var) in self.basis.iter().enumerate() {
            if matches!(var, Var::Structural(_)) {
                for j in 0..m {
                    ynum[j] += &self.madj[i][j];
                }
            }
        }
        if self.det.is_negative() {
            (ynum.iter().map(|v| -v).collect(), -self.det.clone())
        } else {
            (ynum, self.det.clone())
        }
    }

    /// Pivot until no variable has a positive reduced cost.
    pub fn optimize(&mut self, pivot_limit: usize) -> Result<(), SimplexError> {
        let m = self.rows();
        let stall_threshold = 2 * m + 10;
        let mut degenerate_streak = 0usize;
        loop {
            // Positive-denominator multipliers: the reduced cost of
            // column j is (den - ynum . a_j) / den, and of slack i is
            // -ynum_i / den, so all pricing is integer arithmetic.
            let (ynum, den) = self.multipliers_scaled();

            let bland = degenerate_streak > stall_threshold;
            let entering = if bland {
                self.entering_bland(&ynum, &den)
            } else {
                self.entering_dantzig(&ynum, &den)
            };
            let Some(entering) = entering else {
                return Ok(());
            };
            if self.pivots >= pivot_limit {
                return Err(SimplexError::PivotLimit(pivot_limit));
            }
            self.pivots += 1;

            // Direction through the basis: w_i = wnum_i / det. An
            // eligible row has w_i > 0; the ratio x_i / w_i equals
            // xnum_i / wnum_i, where det cancels, so the ratio test
            // cross-multiplies integers. Both products carry the sign of
            // det twice, so the comparison direction is sign-independent.
            let a = self.column_dense(entering);
            let det_positive = self.det.is_positive();
            let wnum: Vec<BigInt> = self
                .madj
                .iter()
                .map(|row| row.iter().zip(&a).map(|(r, c)| r * c).sum())
                .collect();
            let eligible = |i: usize| -> bool {
                !wnum[i].is_zero() && (wnum[i].is_positive() == det_positive)
            };
            let mut leave: Option<usize> = None;
            for i in 0..m {
                if !eligible(i) {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some(l) => {
                        let lhs = &self.xnum[i] * &wnum[l];
                        let rhs = &self.xnum[l] * &wnum[i];
                        match lhs.cmp(&rhs) {
                            std::cmp::Ordering::Less => true,
                            std::cmp::Ordering::Greater => false,
                            std::cmp::Ordering::Equal => {
                                if bland {
                                    self.basis[i] < self.basis[l]
                                } else {
                                    // Larger pivot element keeps
                                    // degenerate stalls short.
                                    (wnum[i] > wnum[l]) == det_positive
                                }
                            }
                        }
                    }
                };
                if better {
                    leave = Some(i);
                }
            }
            let Some(r) = leave else {
                return Err(SimplexError::Unbounded);
            };
            if self.xnum[r].is_zero() {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }

            // Basis bookkeeping, then the Bareiss update: divisions by
            // the outgoing determinant are exact.
            match self.basis[r] {
                Var::Structural(j) => self.structural_in_basis[j] = false,
                Var::Slack(i) => self.slack_in_basis[i] = false,
            }
            match entering {
                Var::Structural(j) => self.structural_in_basis[j] = true,
                Var::Slack(i) => self.slack_in_basis[i] = true,
            }
            self.basis[r] = entering;

            let new_det = wnum[r].clone();
            for i in 0..m {
                if i == r {
                    continue;
                }
                for j in 0..m {
                    let num = &self.madj[i][j] * &new_det - &wnum[i] * &self.madj[r][j];
                    self.madj[i][j] = exact_div(num, &self.det);
                }
                let num = &self.xnum[i] * &new_det - &wnum[i] * &self.xnum[r];
                self.xnum[i] = exact_div(num, &self.det);
            }
            // Row r of the adjugate and its scaled value are unchanged:
            // x_r becomes xnum_r / new_det, the entering variable's value.
            self.det = new_det;
        }
    }

    /// Lowest-index variable with a positive reduced cost; structural
    /// variables order before slacks and the scan stops at the first hit.
    fn entering_bland(&self, ynum: &[BigInt], den: &BigInt) -> Option<Var> {
        for (j, col) in self.columns.iter().enumerate() {
            if !self.structural_in_basis[j] && &col.dot(ynum) < den {
                return Some(Var::Structural(j));
            }
        }
        for (i, num) in ynum.iter().enumerate() {
            if !self.slack_in_basis[i] && num.is_negative() {
                return Some(Var::Slack(i));
            }
        }
        None
    }

    /// Variable with the largest positive reduced cost; ties go to the
    /// lowest variable index.
    fn entering_dantzig(&self, ynum: &[BigInt], den: &BigInt) -> Option<Var> {
        let mut best: Option<(BigInt, Var)> = None;
        for (j, col) in self.columns.iter().enumerate() {
            if self.structural_in_basis[j] {
                continue;
            }
            let score = den - col.dot(ynum);
            if score.is_positive() && best.as_ref().is_none_or(|(b, _)| score > *b) {
                best = Some((score, Var::Structural(j)));
            }
        }
        for (i, num) in ynum.iter().enumerate() {
            if self.slack_in_basis[i] {
                continue;
            }
            let score = -num;
            if score.is_positive() && best.as_ref().is_none_or(|(b, _)| score > *b) {
                best = Some((score, Var::Slack(i)));
            }
        }
        best.map(|(_, var)| var)
    }

    /// Objective value of the current basis.
    pub fn objective(&self) -> BigRational {
        let total: BigInt = self
            .basis
            .iter()
            .zip(&self.xnum)
            .filter(|(var, _)| matches!(var, Var::Structural(_)))
            .map(|(_, v)| v.clone())
            .sum();
        ratio(total, &self.det)
    }

    /// Nonzero structural variable values `(column index, weight)`.
    pub fn primal(&self) -> Vec<(usize, BigRational)> {
        let mut out: Vec<(usize, BigRational)> = self
            .basis
            .iter()
            .zip(&self.xnum)
            .filter_map(|(var, v)| match var {
                Var::Structural(j) if !v.is_zero() => Some((*j, ratio(v.clone(), &self.det))),
                _ => None,
            })
            .collect();
        out.sort_by_key(|(j, _)| *j);
        out
    }

    /// Row duals `y`; all nonnegative once [`PackingLp::optimize`] has
    /// returned.
    pub fn duals(&self) -> Vec<BigRational> {
        let (ynum, den) = self.multipliers_scaled();
        ynum.into_iter().map(|n| ratio(n, &den)).collect()
    }
}

fn ratio(numer: BigInt, denom: &BigInt) -> BigRational {
    BigRational::new(numer, denom.clone())
}

fn exact_div(num: BigInt, den: &BigInt) -> BigInt {
    debug_assert!((&num % den).is_zero(), "Bareiss division must be exact");
    num / den
}

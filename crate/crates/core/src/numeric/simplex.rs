//! Dense two-phase primal simplex for bounded variables.
//!
//! Solves `maximize c'x subject to A x = b, l <= x <= u` where every lower
//! bound is finite and upper bounds may be infinite. Nonbasic variables sit
//! at one of their bounds; a bound flip replaces the pivot whenever the
//! entering variable reaches its opposite bound first. Sized for the small
//! dense problems in this crate (a handful of rows, a few thousand columns).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const COST_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-9;
const FEASIBILITY_TOL: f64 = 1e-9;
/// Consecutive zero-step pivots before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LinearProgram {
    fn validate(&self) -> Result<()> {
        let n = self.a.ncols();
        if self.b.len() != self.a.nrows()
            || self.cost.len() != n
            || self.lower.len() != n
            || self.upper.len() != n
        {
            return Err(Error::invalid("linear program dimensions are inconsistent"));
        }
        if self.lower.iter().any(|l| !l.is_finite()) {
            return Err(Error::invalid("lower bounds must be finite"));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| u < l) {
            return Err(Error::invalid("upper bound below lower bound"));
        }
        Ok(())
    }

    /// Maximizes the objective. `max_iterations` caps the total pivot and
    /// bound-flip count over both phases.
    pub fn maximize(&self, max_iterations: usize) -> Result<LpSolution> {
        self.validate()?;
        let mut tableau = Tableau::new(self);
        let rows = tableau.rows;
        let structural = self.a.ncols();

        // Phase 1: drive the artificials to zero.
        let mut phase1 = vec![0.0; tableau.cols];
        phase1[structural..].iter_mut().for_each(|c| *c = -1.0);
        tableau.optimize(&phase1, max_iterations)?;
        let infeasibility: f64 = (0..rows)
            .filter(|&i| tableau.basis[i] >= structural)
            .map(|i| tableau.beta[i].abs())
            .sum();
        let scale = 1.0 + self.b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if infeasibility > FEASIBILITY_TOL * scale {
            return Err(Error::Infeasible(format!(
                "phase one ended with residual infeasibility {infeasibility:e}"
            )));
        }
        tableau.evict_artificials(structural);
        for j in structural..tableau.cols {
            tableau.upper[j] = 0.0;
        }

        // Phase 2.
        let mut cost = self.cost.clone();
        cost.resize(tableau.cols, 0.0);
        let remaining = max_iterations.saturating_sub(tableau.iterations);
        tableau.optimize(&cost, remaining + tableau.iterations)?;

        let x = tableau.primal(self);
        let objective = x.iter().zip(&self.cost).map(|(x, c)| x * c).sum();
        Ok(LpSolution {
            x,
            objective,
            iterations: tableau.iterations,
        })
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major `B^-1 [A | S]` where `S` holds the signed artificial columns.
    tab: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Sign of each artificial column.
    art_sign: Vec<f64>,
    iterations: usize,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let rows = lp.a.nrows();
        let structural = lp.a.ncols();
        let cols = structural + rows;
        let residual = &lp.b - &lp.a * DVector::from_column_slice(&lp.lower);
        let art_sign: Vec<f64> = residual
            .iter()
            .map(|r| if *r < 0.0 { -1.0 } else { 1.0 })
            .collect();
        let mut tab = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..structural {
                tab[i * cols + j] = art_sign[i] * lp.a[(i, j)];
            }
            tab[i * cols + structural + i] = 1.0;
        }
        let mut lower = lp.lower.clone();
        lower.extend(std::iter::repeat_n(0.0, rows));
        let mut upper = lp.upper.clone();
        upper.extend(std::iter::repeat_n(f64::INFINITY, rows));
        let mut is_basic = vec![false; cols];
        is_basic[structural..].iter_mut().for_each(|b| *b = true);
        Self {
            rows,
            cols,
            tab,
            beta: residual.iter().map(|r| r.abs()).collect(),
            basis: (structural..cols).collect(),
            is_basic,
            at_upper: vec![false; cols],
            lower,
            upper,
            art_sign,
            iterations: 0,
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.tab[i * self.cols + j]
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.upper[j]
        } else {
            self.lower[j]
        }
    }

    fn reduced_cost(&self, cost: &[f64], j: usize) -> f64 {
        let mut d = cost[j];
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                d -= cb * self.at(i, j);
            }
        }
        d
    }

    fn optimize(&mut self, cost: &[f64], max_iterations: usize) -> Result<()> {
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= DEGENERATE_STREAK;
            let Some((entering, direction)) = self.choose_entering(cost, bland) else {
                return Ok(());
            };
            if self.iterations >= max_iterations {
                return Err(Error::NonConvergence {
                    iterations: self.iterations,
                });
            }
            self.iterations += 1;
            let step = self.step(entering, direction, bland)?;
            if step <= PIVOT_TOL {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
        }
    }

    fn choose_entering(&self, cost: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.cols {
            if self.is_basic[j] || self.upper[j] <= self.lower[j] {
                continue;
            }
            let d = self.reduced_cost(cost, j);
            let direction = if !self.at_upper[j] && d > COST_TOL {
                1.0
            } else if self.at_upper[j] && d < -COST_TOL {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, direction));
            }
            if best.is_none_or(|(_, _, score)| d.abs() > score) {
                best = Some((j, direction, d.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Moves `entering` in `direction` as far as feasibility allows and
    /// returns the step length.
    fn step(&mut self, entering: usize, direction: f64, bland: bool) -> Result<f64> {
        let mut theta = self.upper[entering] - self.lower[entering];
        let mut leaving: Option<(usize, bool)> = None;
        let mut leaving_pivot = 0.0;
        for i in 0..self.rows {
            let g = direction * self.at(i, entering);
            let var = self.basis[i];
            let (limit, to_upper) = if g > PIVOT_TOL {
                ((self.beta[i] - self.lower[var]).max(0.0) / g, false)
            } else if g < -PIVOT_TOL && self.upper[var].is_finite() {
                ((self.upper[var] - self.beta[i]).max(0.0) / -g, true)
            } else {
                continue;
            };
            // Ties with a bound flip keep the flip.
            let better = if limit < theta - 1e-12 {
                true
            } else if limit <= theta + 1e-12 {
                match leaving {
                    None => false,
                    Some((r, _)) if bland => var < self.basis[r],
                    Some(_) => g.abs() > leaving_pivot,
                }
            } else {
                false
            };
            if better {
                theta = limit;
                leaving = Some((i, to_upper));
                leaving_pivot = g.abs();
            }
        }
        if !theta.is_finite() {
            return Err(Error::Infeasible("linear program is unbounded".into()));
        }
        for i in 0..self.rows {
            self.beta[i] -= theta * direction * self.at(i, entering);
        }
        match leaving {
            None => {
                self.at_upper[entering] = !self.at_upper[entering];
            }
            Some((r, to_upper)) => {
                let entering_value = self.nonbasic_value(entering) + direction * theta;
                let old = self.basis[r];
                self.is_basic[old] = false;
                self.at_upper[old] = to_upper;
                self.pivot(r, entering);
                self.beta[r] = entering_value;
            }
        }
        Ok(theta)
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let p = self.at(r, j);
        for k in 0..cols {
            self.tab[r * cols + k] /= p;
        }
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.at(i, j);
            if f != 0.0 {
                for k in 0..cols {
                    self.tab[i * cols + k] -= f * self.tab[r * cols + k];
                }
            }
        }
        self.basis[r] = j;
        self.is_basic[j] = true;
    }

    /// Pivots zero-level artificials out of the basis where a structural
    /// column allows it. Rows with no such column are redundant and keep
    /// their artificial, which phase two then holds at zero.
    fn evict_artificials(&mut self, structural: usize) {
        for r in 0..self.rows {
            if self.basis[r] < structural {
                continue;
            }
            let candidate = (0..structural)
                .filter(|&j| !self.is_basic[j])
                .map(|j| (j, self.at(r, j).abs()))
                .filter(|&(_, v)| v > PIVOT_TOL)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((j, _)) = candidate {
                let value = self.nonbasic_value(j);
                let old = self.basis[r];
                self.is_basic[old] = false;
                self.at_upper[old] = false;
                self.pivot(r, j);
                self.beta[r] = value;
            }
        }
    }

    /// Structural solution with basic values re-solved against the original
    /// columns to shed accumulated tableau rounding.
    fn primal(&self, lp: &LinearProgram) -> Vec<f64> {
        let structural = lp.a.ncols();
        let mut x: Vec<f64> = (0..self.cols)
            .map(|j| {
                if self.is_basic[j] {
                    0.0
                } else {
                    self.nonbasic_value(j)
                }
            })
            .collect();
        let column = |j: usize| -> DVector<f64> {
            if j < structural {
                lp.a.column(j).into_owned()
            } else {
                let i = j - structural;
                let mut e = DVector::zeros(self.rows);
                e[i] = self.art_sign[i];
                e
            }
        };
        let mut rhs = lp.b.clone();
        for j in (0..self.cols).filter(|&j| !self.is_basic[j] && x[j] != 0.0) {
            rhs -= column(j) * x[j];
        }
        let mut basis_matrix = DMatrix::zeros(self.rows, self.rows);
        for (i, &j) in self.basis.iter().enumerate() {
            basis_matrix.set_column(i, &column(j));
        }
        let resolved = basis_matrix.lu().solve(&rhs);
        for (i, &j) in self.basis.iter().enumerate() {
            let value = match &resolved {
                Some(v) if v[i].is_finite() => v[i],
                _ => self.beta[i],
            };
            x[j] = value.clamp(self.lower[j], self.upper[j]);
        }
        x.truncate(structural);
        x
    }
}

//! Soft terminal constraint with an L-infinity effort penalty:
//! `min |x(T) - x_f|^2 + w max_k |u_k|`.
//!
//! For a fixed bound `K` the terminal error
//! `phi(K) = min_{|u_k| <= K} |G u - d|^2` is a box-constrained least-squares
//! problem. `G` has only `n` rows, so an active-set method that keeps at most
//! a handful of variables off their bounds solves it exactly; projected
//! gradient is available as a cross-check. `phi` is convex and
//! non-increasing, so the outer objective `phi(K) + w K` is unimodal on
//! `[0, K_hard]` and a golden-section search finds its minimizer.

use nalgebra::{DMatrix, DVector};

use super::{discretize, solve_linf_between, DiscreteSystem, SoftSplit, SolveReport, SolveStatus};
use crate::error::{Error, Result};
use crate::types::{IntegratorChain, SampledSeries, StateVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftTerminalOptions {
    /// Iteration cap per inner solve.
    pub max_inner_iterations: usize,
    /// Projected-gradient stop: relative objective change below this.
    pub inner_tolerance: f64,
    /// Outer stop: bracket width relative to `K_hard`.
    pub outer_tolerance: f64,
}

impl Default for SoftTerminalOptions {
    fn default() -> Self {
        Self {
            max_inner_iterations: 100_000,
            inner_tolerance: 1e-10,
            outer_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub controls: Vec<f64>,
    /// Squared terminal error.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `min |G u - d|^2` subject to `|u_k| <= K`, for varying `K`.
#[derive(Debug, Clone)]
pub struct BoxLeastSquares {
    g: DMatrix<f64>,
    d: DVector<f64>,
    lipschitz: f64,
    /// Minimum-`K` exact solution, used to warm-start every inner solve.
    hard_controls: Vec<f64>,
    hard_bound: f64,
    options: SoftTerminalOptions,
}

impl BoxLeastSquares {
    pub fn new(
        system: &DiscreteSystem,
        initial: &[f64],
        target: &[f64],
        options: SoftTerminalOptions,
    ) -> Result<Self> {
        let required = system.required_response(initial, target)?;
        let hard = solve_linf_between(system, initial, target)?;
        let g = system.reachability();
        // Largest eigenvalue of G'G equals that of the n x n Gram matrix G G'.
        let lipschitz = 2.0 * power_iteration(&(&g * g.transpose()), 1000);
        Ok(Self {
            g,
            d: DVector::from_vec(required),
            lipschitz,
            hard_controls: hard.controls().to_vec(),
            hard_bound: hard.bound,
            options,
        })
    }

    /// Smallest bound at which the terminal error vanishes.
    pub fn hard_bound(&self) -> f64 {
        self.hard_bound
    }

    /// `|d|^2`: the terminal error of the zero control.
    pub fn zero_control_error(&self) -> f64 {
        self.d.norm_squared()
    }

    fn objective(&self, u: &DVector<f64>) -> f64 {
        (&self.g * u - &self.d).norm_squared()
    }

    /// Solves the inner problem at bound `K` exactly with the bounded-variable
    /// least-squares active-set method.
    pub fn solve(&self, bound: f64) -> InnerSolution {
        match self.trivial(bound) {
            Some(sol) => sol,
            None => self.active_set(bound),
        }
    }

    /// Zero control at `K = 0`; the minimum-`K` control from `K_hard` on.
    fn trivial(&self, bound: f64) -> Option<InnerSolution> {
        let steps = self.g.ncols();
        if bound <= 0.0 || self.hard_bound == 0.0 {
            return Some(InnerSolution {
                controls: vec![0.0; steps],
                value: self.zero_control_error(),
                iterations: 0,
                converged: true,
            });
        }
        if bound >= self.hard_bound {
            let u = DVector::from_column_slice(&self.hard_controls);
            return Some(InnerSolution {
                value: self.objective(&u),
                controls: self.hard_controls.clone(),
                iterations: 0,
                converged: true,
            });
        }
        None
    }

    /// Bounded-variable least squares. Every variable starts at the bound
    /// matching the sign of the minimum-`K` control. Each outer step frees
    /// the bound variable with the most violated optimality condition and
    /// re-solves the unconstrained problem on the free set, backtracking
    /// along the segment to the new solution whenever it leaves the box.
    fn active_set(&self, bound: f64) -> InnerSolution {
        let steps = self.g.ncols();
        let mut u = DVector::from_iterator(
            steps,
            self.hard_controls
                .iter()
                .map(|v| if *v < 0.0 { -bound } else { bound }),
        );
        let mut free = vec![false; steps];
        let g_scale = self.g.amax();
        let tol = 1e-13 * g_scale * self.d.norm().max(f64::MIN_POSITIVE);
        let mut iterations = 0;
        let mut converged = false;
        let mut blocked: Option<usize> = None;

        while iterations < self.options.max_inner_iterations {
            iterations += 1;
            let residual = &self.d - &self.g * &u;
            let w = self.g.tr_mul(&residual);
            let candidate = (0..steps)
                .filter(|&k| !free[k] && Some(k) != blocked)
                .filter(|&k| (u[k] <= -bound && w[k] > tol) || (u[k] >= bound && w[k] < -tol))
                .max_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs()));
            let Some(entering) = candidate else {
                converged = true;
                break;
            };
            free[entering] = true;
            let saved = u[entering];
            blocked = None;

            loop {
                let free_idx: Vec<usize> = (0..steps).filter(|&k| free[k]).collect();
                if free_idx.is_empty() {
                    break;
                }
                let z = self.free_least_squares(&u, &free_idx);
                let limit = bound * (1.0 + 1e-12);
                if z.iter().all(|v| v.abs() <= limit) {
                    for (&k, &v) in free_idx.iter().zip(z.iter()) {
                        u[k] = v.clamp(-bound, bound);
                    }
                    break;
                }
                // Largest step toward z that stays inside the box.
                let mut alpha = 1.0_f64;
                for (&k, &target) in free_idx.iter().zip(z.iter()) {
                    if target.abs() > limit {
                        let edge = bound.copysign(target);
                        let span = target - u[k];
                        if span != 0.0 {
                            alpha = alpha.min(((edge - u[k]) / span).max(0.0));
                        }
                    }
                }
                if alpha <= 1e-14 && free_idx.len() == 1 {
                    // The freed variable cannot move: put it back and try another.
                    u[entering] = saved;
                    free[entering] = false;
                    blocked = Some(entering);
                    break;
                }
                for (&k, &target) in free_idx.iter().zip(z.iter()) {
                    u[k] += alpha * (target - u[k]);
                    if u[k].abs() >= bound * (1.0 - 1e-12) {
                        u[k] = bound.copysign(u[k]);
                        free[k] = false;
                    }
                }
                iterations += 1;
                if iterations >= self.options.max_inner_iterations {
                    break;
                }
            }
        }
        InnerSolution {
            value: self.objective(&u),
            controls: u.as_slice().to_vec(),
            iterations,
            converged,
        }
    }

    /// Minimum-norm least-squares values for the free variables with every
    /// other variable held at its current value.
    fn free_least_squares(&self, u: &DVector<f64>, free_idx: &[usize]) -> DVector<f64> {
        let n = self.g.nrows();
        let mut rhs = self.d.clone();
        for k in 0..self.g.ncols() {
            if free_idx.binary_search(&k).is_err() && u[k] != 0.0 {
                rhs.axpy(-u[k], &self.g.column(k), 1.0);
            }
        }
        let sub = DMatrix::from_fn(n, free_idx.len(), |i, j| self.g[(i, free_idx[j])]);
        let svd = sub.svd(true, true);
        let eps = 1e-14 * svd.singular_values.max();
        svd.solve(&rhs, eps).unwrap_or_else(|_| {
            DVector::from_iterator(free_idx.len(), free_idx.iter().map(|&k| u[k]))
        })
    }

    /// Projected gradient with step `1/L`, warm-started from the scaled
    /// minimum-`K` control. Slow on this ill-conditioned problem; kept as an
    /// independent check on [`BoxLeastSquares::solve`].
    pub fn solve_projected_gradient(&self, bound: f64) -> InnerSolution {
        if let Some(sol) = self.trivial(bound) {
            return sol;
        }
        let steps = self.g.ncols();
        let ratio = bound / self.hard_bound;
        let mut u = DVector::from_iterator(
            steps,
            self.hard_controls
                .iter()
                .map(|v| (v * ratio).clamp(-bound, bound)),
        );
        let step = 1.0 / self.lipschitz;
        let floor = 1e-24 * self.zero_control_error().max(f64::MIN_POSITIVE);
        let mut value = self.objective(&u);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.options.max_inner_iterations {
            iterations += 1;
            let residual = &self.g * &u - &self.d;
            let gradient = self.g.tr_mul(&residual) * 2.0;
            u.axpy(-step, &gradient, 1.0);
            u.apply(|v| *v = v.clamp(-bound, bound));
            let next = self.objective(&u);
            let change = (value - next).abs();
            value = next;
            if change <= self.options.inner_tolerance * value || value <= floor {
                converged = true;
                break;
            }
        }
        InnerSolution {
            controls: u.as_slice().to_vec(),
            value,
            iterations,
            converged,
        }
    }
}

fn power_iteration(m: &DMatrix<f64>, iterations: usize) -> f64 {
    let n = m.nrows();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let w = m * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - lambda).abs() <= 1e-14 * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Minimizes `|x(T) - x_f|^2 + w_effort * max_k |u_k|` over `N`
/// zero-order-hold controls.
///
/// The split reported in [`SoftSplit`] is `terminal_cost = phi(K_opt)` and
/// `effort_cost = w_effort * K_opt`.
pub fn solve_soft_terminal(
    chain: &IntegratorChain,
    initial: &StateVector,
    target: &StateVector,
    effort_weight: f64,
    duration: f64,
    steps: usize,
    options: SoftTerminalOptions,
) -> Result<SolveReport> {
    if !(effort_weight.is_finite() && effort_weight >= 0.0) {
        return Err(Error::invalid(format!(
            "effort weight must be finite and non-negative, got {effort_weight}"
        )));
    }
    let system = discretize(chain, duration, steps)?;
    let problem = BoxLeastSquares::new(&system, initial.as_slice(), target.as_slice(), options)?;
    let hard = problem.hard_bound();
    let outer = |k: f64, sol: &InnerSolution| sol.value + effort_weight * k;

    let mut total_iterations = 0;
    let mut all_converged = true;
    let mut evaluate = |k: f64| {
        let sol = problem.solve(k);
        total_iterations += sol.iterations;
        all_converged &= sol.converged;
        sol
    };

    let mut best = (0.0, evaluate(0.0));
    let consider = |k: f64, sol: InnerSolution, best: &mut (f64, InnerSolution)| {
        if outer(k, &sol) < outer(best.0, &best.1) {
            *best = (k, sol);
        }
    };
    if hard > 0.0 {
        let top = evaluate(hard);
        consider(hard, top, &mut best);

        let (mut lo, mut hi) = (0.0, hard);
        let mut x1 = hi - GOLDEN * (hi - lo);
        let mut x2 = lo + GOLDEN * (hi - lo);
        let mut s1 = evaluate(x1);
        let mut s2 = evaluate(x2);
        while hi - lo > options.outer_tolerance * hard {
            if outer(x1, &s1) <= outer(x2, &s2) {
                hi = x2;
                x2 = x1;
                s2 = s1;
                x1 = hi - GOLDEN * (hi - lo);
                s1 = evaluate(x1);
            } else {
                lo = x1;
                x1 = x2;
                s1 = s2;
                x2 = lo + GOLDEN * (hi - lo);
                s2 = evaluate(x2);
            }
        }
        consider(x1, s1, &mut best);
        consider(x2, s2, &mut best);
    }

    let (bound, solution) = best;
    let status = if all_converged {
        SolveStatus::Optimal
    } else {
        SolveStatus::IterationLimit
    };
    let terminal_state = system.propagate(initial.as_slice(), &solution.controls)?;
    Ok(SolveReport {
        control: SampledSeries::new(system.control_times(), solution.controls)?,
        bound,
        terminal_state,
        iterations: total_iterations,
        status,
        soft: Some(SoftSplit {
            effort_weight,
            terminal_cost: solution.value,
            effort_cost: effort_weight * bound,
            hard_bound: hard,
        }),
    })
}

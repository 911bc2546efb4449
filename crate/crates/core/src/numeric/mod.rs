//! Discretized solvers for the same control problems the closed form
//! answers: the L-infinity epigraph LP, the L2 minimum-norm control, and the
//! soft-terminal trade-off.
//!
//! The control is held constant over `N` equal steps. Because the plant is a
//! pure integrator chain, the zero-order-hold discretization is exact and the
//! terminal state is an exact linear function of the `N` control values.

mod simplex;
mod soft;

use nalgebra::{DMatrix, DVector};

pub use simplex::{LinearProgram, LpSolution};
pub use soft::{solve_soft_terminal, BoxLeastSquares, InnerSolution, SoftTerminalOptions};

use crate::error::{Error, Result};
use crate::types::{IntegratorChain, MovementTask, SampledSeries, StateVector};

/// Default number of control steps.
pub const DEFAULT_STEPS: usize = 400;

/// Zero-order-hold discretization of an integrator chain over `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSystem {
    order: usize,
    steps: usize,
    duration: f64,
    step: f64,
    phi: DMatrix<f64>,
    gamma: DVector<f64>,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Exact zero-order-hold matrices: `phi[j][k] = h^(k-j) / (k-j)!` for
/// `k >= j`, `gamma[j] = h^(n-j) / (n-j)!`.
pub fn discretize(chain: &IntegratorChain, duration: f64, steps: usize) -> Result<DiscreteSystem> {
    let n = chain.order();
    if steps < 2 * (n + 1) {
        return Err(Error::invalid(format!(
            "need at least {} steps for order {n}, got {steps}",
            2 * (n + 1)
        )));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::invalid(format!(
            "duration must be positive, got {duration}"
        )));
    }
    let h = duration / steps as f64;
    let phi = DMatrix::from_fn(n, n, |j, k| {
        if k >= j {
            h.powi((k - j) as i32) / factorial(k - j)
        } else {
            0.0
        }
    });
    let gamma = DVector::from_fn(n, |j, _| h.powi((n - j) as i32) / factorial(n - j));
    Ok(DiscreteSystem {
        order: n,
        steps,
        duration,
        step: h,
        phi,
        gamma,
    })
}

impl DiscreteSystem {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn gamma(&self) -> &DVector<f64> {
        &self.gamma
    }

    /// Left edge of each control interval.
    pub fn control_times(&self) -> Vec<f64> {
        (0..self.steps).map(|k| k as f64 * self.step).collect()
    }

    fn check_state(&self, state: &[f64]) -> Result<()> {
        if state.len() != self.order {
            return Err(Error::OrderMismatch {
                expected: self.order,
                actual: state.len(),
            });
        }
        Ok(())
    }

    /// States at every grid point `0..=N` under the given controls.
    pub fn simulate(&self, initial: &[f64], controls: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_state(initial)?;
        if controls.len() != self.steps {
            return Err(Error::invalid(format!(
                "expected {} controls, got {}",
                self.steps,
                controls.len()
            )));
        }
        let mut x = DVector::from_column_slice(initial);
        let mut states = Vec::with_capacity(self.steps + 1);
        states.push(initial.to_vec());
        for &u in controls {
            x = &self.phi * &x + &self.gamma * u;
            states.push(x.as_slice().to_vec());
        }
        Ok(states)
    }

    /// State at `T` under the given controls.
    pub fn propagate(&self, initial: &[f64], controls: &[f64]) -> Result<Vec<f64>> {
        Ok(self.simulate(initial, controls)?.pop().unwrap_or_default())
    }

    /// State at `T` with zero control: `x_j(T) = sum_k x_(j+k) T^k / k!`.
    pub fn free_response(&self, initial: &[f64]) -> Result<Vec<f64>> {
        self.check_state(initial)?;
        let n = self.order;
        Ok((0..n)
            .map(|j| {
                (0..n - j)
                    .map(|k| initial[j + k] * self.duration.powi(k as i32) / factorial(k))
                    .sum()
            })
            .collect())
    }

    /// Reachability matrix `G` (`n x N`): column `k` is the terminal-state
    /// response to a unit control on step `k`. Row `j` is
    /// `h^m ((N-k)^m - (N-k-1)^m) / m!` with `m = n - j`, evaluated without
    /// cancellation.
    pub fn reachability(&self) -> DMatrix<f64> {
        let scaled = self.scaled_reachability();
        let n = self.order;
        DMatrix::from_fn(n, self.steps, |j, k| {
            let m = n - j;
            scaled[(j, k)] * self.duration.powi(m as i32) / factorial(m)
        })
    }

    /// `G` with row `j` divided by `T^m / m!`, so every row sums to one and
    /// entries lie in `[0, 1]`.
    pub fn scaled_reachability(&self) -> DMatrix<f64> {
        let n = self.order;
        let big_n = self.steps as f64;
        DMatrix::from_fn(n, self.steps, |j, k| {
            let m = n - j;
            let a = (self.steps - k) as f64;
            let b = a - 1.0;
            // a^m - b^m = sum_i a^i b^(m-1-i) since a - b = 1.
            let diff: f64 = (0..m)
                .map(|i| a.powi(i as i32) * b.powi((m - 1 - i) as i32))
                .sum();
            diff / big_n.powi(m as i32)
        })
    }

    /// Per-row factors mapping physical terminal states to scaled ones.
    fn row_scale(&self) -> Vec<f64> {
        let n = self.order;
        (0..n)
            .map(|j| {
                let m = n - j;
                factorial(m) / self.duration.powi(m as i32)
            })
            .collect()
    }

    /// Terminal displacement the controls must produce:
    /// `x_f - free_response(x_i)`.
    pub fn required_response(&self, initial: &[f64], target: &[f64]) -> Result<Vec<f64>> {
        self.check_state(target)?;
        let free = self.free_response(initial)?;
        Ok(target.iter().zip(&free).map(|(f, r)| f - r).collect())
    }
}

/// Outcome of a numeric solve.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    /// An inner iteration cap was hit; the best iterate is reported.
    IterationLimit,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveStatus::Optimal => f.write_str("optimal"),
            SolveStatus::IterationLimit => f.write_str("iteration_limit"),
        }
    }
}

/// Decomposition of the soft-terminal optimum: `terminal_cost` is the
/// squared terminal error and `effort_cost` is `w_effort * bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftSplit {
    pub effort_weight: f64,
    pub terminal_cost: f64,
    pub effort_cost: f64,
    /// Bound at which the terminal error vanishes.
    pub hard_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub control: SampledSeries,
    /// Achieved bound `K` on `|u|`.
    pub bound: f64,
    pub terminal_state: Vec<f64>,
    pub iterations: usize,
    pub status: SolveStatus,
    pub soft: Option<SoftSplit>,
}

impl SolveReport {
    fn new(
        system: &DiscreteSystem,
        initial: &[f64],
        controls: Vec<f64>,
        bound: f64,
        iterations: usize,
        status: SolveStatus,
    ) -> Result<Self> {
        let terminal_state = system.propagate(initial, &controls)?;
        let control = SampledSeries::new(system.control_times(), controls)?;
        Ok(Self {
            control,
            bound,
            terminal_state,
            iterations,
            status,
            soft: None,
        })
    }

    pub fn controls(&self) -> &[f64] {
        self.control.values()
    }
}

fn rest_states(chain: &IntegratorChain, task: &MovementTask) -> (StateVector, StateVector) {
    (
        StateVector::at_rest(chain.order(), task.x_start()),
        StateVector::at_rest(chain.order(), task.x_end()),
    )
}

/// Minimum-`K` control for a rest-to-rest task: the epigraph LP
/// `min K s.t. |u_k| <= K, G u = d`.
pub fn solve_min_effort_linf(
    chain: &IntegratorChain,
    task: &MovementTask,
    steps: usize,
) -> Result<SolveReport> {
    let system = discretize(chain, task.duration(), steps)?;
    let (start, end) = rest_states(chain, task);
    solve_linf_between(&system, start.as_slice(), end.as_slice())
}

/// Epigraph LP between arbitrary initial and target states.
///
/// Solved in the homogeneous form `max t s.t. G_s s = t e, |s_k| <= 1`,
/// where `G_s` is the row-scaled reachability matrix and `e` the unit
/// required response; then `K = |d_s| / t` and `u = K s`. A basic optimal
/// solution has at most `n - 1` fractional entries, so the control is
/// bang-bang away from the switch samples.
pub fn solve_linf_between(
    system: &DiscreteSystem,
    initial: &[f64],
    target: &[f64],
) -> Result<SolveReport> {
    let n = system.order();
    let steps = system.steps();
    let required = system.required_response(initial, target)?;
    let scale = system.row_scale();
    let scaled: Vec<f64> = required.iter().zip(&scale).map(|(d, s)| d * s).collect();
    let norm = scaled.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm
        <= 1e-14
            * (1.0
                + initial
                    .iter()
                    .chain(target)
                    .fold(0.0_f64, |m, v| m.max(v.abs())))
    {
        return SolveReport::new(
            system,
            initial,
            vec![0.0; steps],
            0.0,
            0,
            SolveStatus::Optimal,
        );
    }

    let g = system.scaled_reachability();
    let mut a = DMatrix::zeros(n, steps + 1);
    a.view_mut((0, 0), (n, steps)).copy_from(&g);
    for j in 0..n {
        a[(j, steps)] = -scaled[j] / norm;
    }
    let mut cost = vec![0.0; steps + 1];
    cost[steps] = 1.0;
    let mut lower = vec![-1.0; steps + 1];
    lower[steps] = 0.0;
    let mut upper = vec![1.0; steps + 1];
    upper[steps] = f64::INFINITY;
    let lp = LinearProgram {
        a,
        b: DVector::zeros(n),
        cost,
        lower,
        upper,
    };
    let solution = lp.maximize(50 * (steps + n + 1))?;
    let t = solution.x[steps];
    if t.is_nan() || t <= 0.0 {
        return Err(Error::Infeasible(
            "epigraph LP returned a non-positive scale; target unreachable".into(),
        ));
    }
    let bound = norm / t;
    let controls: Vec<f64> = solution.x[..steps].iter().map(|s| s * bound).collect();
    SolveReport::new(
        system,
        initial,
        controls,
        bound,
        solution.iterations,
        SolveStatus::Optimal,
    )
}

/// Minimum-Euclidean-norm control for a rest-to-rest task, from the normal
/// equations of the `n x N` terminal constraint.
pub fn solve_min_effort_l2(
    chain: &IntegratorChain,
    task: &MovementTask,
    steps: usize,
) -> Result<SolveReport> {
    let system = discretize(chain, task.duration(), steps)?;
    let (start, end) = rest_states(chain, task);
    solve_l2_between(&system, start.as_slice(), end.as_slice())
}

/// L2 minimum-norm control between arbitrary states: `u = G' (G G')^-1 d`,
/// using the row-scaled system (row scaling leaves the solution unchanged).
pub fn solve_l2_between(
    system: &DiscreteSystem,
    initial: &[f64],
    target: &[f64],
) -> Result<SolveReport> {
    let required = system.required_response(initial, target)?;
    let scale = system.row_scale();
    let d = DVector::from_iterator(
        required.len(),
        required.iter().zip(&scale).map(|(d, s)| d * s),
    );
    let g = system.scaled_reachability();
    let gram = &g * g.transpose();
    let cholesky = gram.clone().cholesky().ok_or_else(|| {
        Error::SingularGram(format!(
            "reachability Gram matrix of order {} is not positive definite",
            system.order()
        ))
    })?;
    let lambda = cholesky.solve(&d);
    if lambda.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularGram(
            "normal equations produced non-finite values".into(),
        ));
    }
    let controls: Vec<f64> = (g.transpose() * lambda).iter().copied().collect();
    let bound = controls.iter().fold(0.0_f64, |m, u| m.max(u.abs()));
    SolveReport::new(system, initial, controls, bound, 1, SolveStatus::Optimal)
}

/// Counts bang-bang switches in a sampled control, including the entry and
/// exit switches.
///
/// Samples with `|u| >= (1 - tol) K` are classified by sign; consecutive
/// equal signs form a block. The result is the number of block boundaries
/// plus two. At most two dead-zone samples (`|u| < (1 - tol) K`) are
/// tolerated per switch.
pub fn count_switches(control: &SampledSeries, bound: f64, tol: f64) -> Result<usize> {
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::invalid(format!(
            "bound must be positive, got {bound}"
        )));
    }
    if !(0.0..1.0).contains(&tol) {
        return Err(Error::invalid(format!(
            "tolerance must be in [0, 1), got {tol}"
        )));
    }
    let threshold = (1.0 - tol) * bound;
    let mut dead = 0usize;
    let mut last_sign = 0.0;
    let mut boundaries = 0usize;
    for &u in control.values() {
        if u.abs() < threshold {
            dead += 1;
            continue;
        }
        let sign = u.signum();
        if last_sign != 0.0 && sign != last_sign {
            boundaries += 1;
        }
        last_sign = sign;
    }
    if last_sign == 0.0 {
        return Err(Error::StructureViolation(
            "no sample reaches the bound".into(),
        ));
    }
    let switches = boundaries + 2;
    let allowed = 2 * switches;
    if dead > allowed {
        return Err(Error::StructureViolation(format!(
            "{dead} samples inside the dead zone, at most {allowed} tolerated"
        )));
    }
    Ok(switches)
}

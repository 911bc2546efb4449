//! Domain types shared by every module.
//!
//! All types validate their invariants on construction and are immutable
//! afterwards, so they can be shared freely between threads.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest supported chain order. The closed-form amplitude grows like
/// `4^(n-1) (n-1)!`, which leaves any practical range past this point.
pub const MAX_ORDER: usize = 12;

/// Relative tolerance for switch-time symmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Relative tolerance for derivative continuity across trajectory segments.
pub const CONTINUITY_TOL: f64 = 1e-9;

/// An `n`-th order integrator: the control is the `n`-th derivative of position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IntegratorChain {
    order: usize,
}

impl IntegratorChain {
    pub fn new(order: usize) -> Result<Self> {
        check_order(order)?;
        Ok(Self { order })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Shift matrix: ones on the superdiagonal.
    pub fn a_matrix(&self) -> DMatrix<f64> {
        let n = self.order;
        DMatrix::from_fn(n, n, |i, j| if j == i + 1 { 1.0 } else { 0.0 })
    }

    /// Input column: a single one in the last entry.
    pub fn b_vector(&self) -> DVector<f64> {
        let mut b = DVector::zeros(self.order);
        b[self.order - 1] = 1.0;
        b
    }
}

pub(crate) fn check_order(order: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&order) {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange(order))
    }
}

/// Position and its first `n - 1` time derivatives (entry 0 is position).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation("state vector must be non-empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(
                "state vector entries must be finite".into(),
            ));
        }
        Ok(Self(values))
    }

    /// Resting state at `position` for a chain of the given order.
    pub fn at_rest(order: usize, position: f64) -> Self {
        let mut v = vec![0.0; order.max(1)];
        v[0] = position;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn position(&self) -> f64 {
        self.0[0]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for StateVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A rest-to-rest point-to-point movement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovementTask {
    x_start: f64,
    x_end: f64,
    duration: f64,
}

impl MovementTask {
    pub fn new(x_start: f64, x_end: f64, duration: f64) -> Result<Self> {
        if !x_start.is_finite() || !x_end.is_finite() {
            return Err(Error::Validation("task positions must be finite".into()));
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::Validation(format!(
                "task duration must be positive and finite, got {duration}"
            )));
        }
        Ok(Self {
            x_start,
            x_end,
            duration,
        })
    }

    pub fn x_start(&self) -> f64 {
        self.x_start
    }

    pub fn x_end(&self) -> f64 {
        self.x_end
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn displacement(&self) -> f64 {
        self.x_end - self.x_start
    }
}

/// Sign of the first interval of a bang-bang signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    /// `Negative` for negative values, `Positive` otherwise (including zero).
    pub fn of(value: f64) -> Self {
        if value < 0.0 {
            Sign::Negative
        } else {
            Sign::Positive
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }
}

/// Piecewise-constant control of magnitude `amplitude` that alternates sign
/// at every switch time. Interval `i` (between `switch_times[i]` and
/// `switch_times[i + 1]`) carries `first_sign * (-1)^i * amplitude`.
#[derive(Debug, Clone, PartialEq)]
pub struct BangBangSignal {
    amplitude: f64,
    switch_times: Vec<f64>,
    first_sign: Sign,
}

impl BangBangSignal {
    pub fn new(amplitude: f64, switch_times: Vec<f64>, first_sign: Sign) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::Validation(format!(
                "amplitude must be finite and non-negative, got {amplitude}"
            )));
        }
        if switch_times.len() < 2 {
            return Err(Error::Validation(
                "a bang-bang signal needs at least two switch times".into(),
            ));
        }
        if switch_times[0] != 0.0 {
            return Err(Error::Validation("first switch time must be 0".into()));
        }
        if switch_times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Validation("switch times must be finite".into()));
        }
        if switch_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation(
                "switch times must be strictly increasing".into(),
            ));
        }
        let duration = switch_times[switch_times.len() - 1];
        let last = switch_times.len() - 1;
        for i in 0..=last {
            let mismatch = switch_times[i] + switch_times[last - i] - duration;
            if mismatch.abs() > SYMMETRY_TOL * duration {
                return Err(Error::Validation(format!(
                    "switch times are not symmetric about T/2 (t_{i} + t_{} - T = {mismatch:e})",
                    last - i
                )));
            }
        }
        Ok(Self {
            amplitude,
            switch_times,
            first_sign,
        })
    }

    /// The identically zero signal on `[0, duration]`.
    pub fn zero(duration: f64) -> Result<Self> {
        Self::new(0.0, vec![0.0, duration], Sign::Positive)
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn switch_times(&self) -> &[f64] {
        &self.switch_times
    }

    pub fn first_sign(&self) -> Sign {
        self.first_sign
    }

    pub fn duration(&self) -> f64 {
        self.switch_times[self.switch_times.len() - 1]
    }

    /// Number of constant intervals; equals the chain order for optimal signals.
    pub fn interval_count(&self) -> usize {
        self.switch_times.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }

    /// Control value on interval `i`.
    pub fn interval_value(&self, i: usize) -> f64 {
        let alternation = if i.is_multiple_of(2) { 1.0 } else { -1.0 };
        self.first_sign.as_f64() * alternation * self.amplitude
    }

    /// Right-continuous value at time `t`; zero outside `[0, T)`.
    pub fn value_at(&self, t: f64) -> f64 {
        if t < 0.0 || t >= self.duration() {
            return 0.0;
        }
        let i = self.switch_times.partition_point(|&s| s <= t) - 1;
        self.interval_value(i)
    }
}

/// One weighted impulse of a spike train.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impulse {
    pub time: f64,
    pub weight: f64,
}

/// Timed, signed impulses on `[0, duration]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTrain {
    impulses: Vec<Impulse>,
    duration: f64,
}

impl SpikeTrain {
    pub fn new(impulses: Vec<Impulse>, duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::Validation(
                "spike train duration must be positive".into(),
            ));
        }
        if impulses
            .iter()
            .any(|s| !s.weight.is_finite() || !(0.0..=duration).contains(&s.time))
        {
            return Err(Error::Validation(
                "impulse times must lie in [0, T] with finite weights".into(),
            ));
        }
        if impulses.windows(2).any(|w| w[1].time < w[0].time) {
            return Err(Error::Validation(
                "impulse times must be non-decreasing".into(),
            ));
        }
        Ok(Self { impulses, duration })
    }

    pub fn impulses(&self) -> &[Impulse] {
        &self.impulses
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn is_empty(&self) -> bool {
        self.impulses.is_empty()
    }

    pub fn len(&self) -> usize {
        self.impulses.len()
    }
}

/// Polynomial piece on `[start, end]`, coefficients in ascending powers of
/// local time `s = t - start`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySegment {
    pub start: f64,
    pub end: f64,
    pub coeffs: Vec<f64>,
}

impl PolySegment {
    /// `d`-th derivative at local time `s`, by Horner's scheme.
    pub fn derivative(&self, s: f64, d: usize) -> f64 {
        let c = &self.coeffs;
        if d >= c.len() {
            return 0.0;
        }
        let mut acc = 0.0;
        for k in (d..c.len()).rev() {
            acc = acc * s + c[k] * falling_factorial(k, d);
        }
        acc
    }
}

/// `k! / (k - d)!`
fn falling_factorial(k: usize, d: usize) -> f64 {
    ((k - d + 1)..=k).fold(1.0, |acc, v| acc * v as f64)
}

/// Exact piecewise-polynomial position trajectory of an integrator chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseTrajectory {
    order: usize,
    segments: Vec<PolySegment>,
}

impl PiecewiseTrajectory {
    /// Builds a trajectory and checks tiling plus continuity of the first
    /// `order - 1` derivatives across boundaries.
    pub fn new(order: usize, segments: Vec<PolySegment>) -> Result<Self> {
        check_order(order)?;
        if segments.is_empty() {
            return Err(Error::Validation(
                "trajectory needs at least one segment".into(),
            ));
        }
        for seg in &segments {
            if seg.end.partial_cmp(&seg.start) != Some(std::cmp::Ordering::Greater)
                || seg.coeffs.is_empty()
            {
                return Err(Error::Validation(
                    "empty or reversed trajectory segment".into(),
                ));
            }
        }
        for pair in segments.windows(2) {
            let (left, right) = (&pair[0], &pair[1]);
            if left.end != right.start {
                return Err(Error::Validation(format!(
                    "segments do not tile: gap between {} and {}",
                    left.end, right.start
                )));
            }
            let h = left.end - left.start;
            for d in 0..order {
                let a = left.derivative(h, d);
                let b = right.derivative(0.0, d);
                let scale = a.abs().max(b.abs()).max(1.0);
                if (a - b).abs() > CONTINUITY_TOL * scale {
                    return Err(Error::Validation(format!(
                        "derivative {d} discontinuous at t = {}: {a} vs {b}",
                        right.start
                    )));
                }
            }
        }
        Ok(Self { order, segments })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn segments(&self) -> &[PolySegment] {
        &self.segments
    }

    pub fn start_time(&self) -> f64 {
        self.segments[0].start
    }

    pub fn end_time(&self) -> f64 {
        self.segments[self.segments.len() - 1].end
    }

    pub fn duration(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    /// `d`-th derivative at `t`. Times outside the span are clamped to the
    /// nearest endpoint.
    pub fn derivative(&self, t: f64, d: usize) -> f64 {
        let t = t.clamp(self.start_time(), self.end_time());
        let idx = self
            .segments
            .partition_point(|s| s.end <= t)
            .min(self.segments.len() - 1);
        let seg = &self.segments[idx];
        seg.derivative(t - seg.start, d)
    }

    pub fn position(&self, t: f64) -> f64 {
        self.derivative(t, 0)
    }

    pub fn velocity(&self, t: f64) -> f64 {
        self.derivative(t, 1)
    }

    /// Full state (`order` entries) at `t`.
    pub fn state(&self, t: f64) -> Vec<f64> {
        (0..self.order).map(|d| self.derivative(t, d)).collect()
    }

    /// Samples derivatives `0..=max_derivative` on a uniform grid of
    /// `samples` points spanning the trajectory.
    pub fn sample_table(&self, samples: usize, max_derivative: usize) -> Result<SampleTable> {
        if samples < 2 {
            return Err(Error::invalid("need at least two samples"));
        }
        let (t0, t1) = (self.start_time(), self.end_time());
        let times: Vec<f64> = (0..samples)
            .map(|i| {
                if i + 1 == samples {
                    t1
                } else {
                    t0 + (t1 - t0) * i as f64 / (samples - 1) as f64
                }
            })
            .collect();
        let columns = (0..=max_derivative)
            .map(|d| times.iter().map(|&t| self.derivative(t, d)).collect())
            .collect();
        Ok(SampleTable { times, columns })
    }
}

/// Times plus one column per derivative (position first).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    pub times: Vec<f64>,
    pub columns: Vec<Vec<f64>>,
}

/// A scalar signal on strictly increasing sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl SampledSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Validation(format!(
                "series length mismatch: {} times, {} values",
                times.len(),
                values.len()
            )));
        }
        if let Some(i) = first_non_increasing(&times) {
            return Err(Error::Validation(format!(
                "series times not strictly increasing at index {i}"
            )));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn first_non_increasing(times: &[f64]) -> Option<usize> {
    times
        .windows(2)
        .position(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        .map(|i| i + 1)
}

/// Minimum number of samples in a recorded trial.
pub const MIN_TRIAL_SAMPLES: usize = 8;

/// One recorded (or synthesized) movement along its movement axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    id: String,
    times: Vec<f64>,
    positions: Vec<f64>,
    subject: String,
    movement_type: String,
}

impl Trial {
    pub fn new(
        id: impl Into<String>,
        times: Vec<f64>,
        positions: Vec<f64>,
        subject: impl Into<String>,
        movement_type: impl Into<String>,
    ) -> Result<Self> {
        let id = id.into();
        if times.len() != positions.len() {
            return Err(Error::Validation(format!(
                "trial {id}: {} times but {} positions",
                times.len(),
                positions.len()
            )));
        }
        if times.len() < MIN_TRIAL_SAMPLES {
            return Err(Error::Validation(format!(
                "trial {id}: {} samples, need at least {MIN_TRIAL_SAMPLES}",
                times.len()
            )));
        }
        if times.iter().chain(&positions).any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("trial {id}: non-finite sample")));
        }
        if let Some(i) = first_non_increasing(&times) {
            return Err(Error::Validation(format!(
                "trial {id}: time not strictly increasing at sample {i}"
            )));
        }
        Ok(Self {
            id,
            times,
            positions,
            subject: subject.into(),
            movement_type: movement_type.into(),
        })
    }

    /// Projects multi-dimensional samples onto the straight line from the
    /// first to the last sample, measured from the first sample.
    pub fn from_projection(
        id: impl Into<String>,
        times: Vec<f64>,
        points: &[Vec<f64>],
        subject: impl Into<String>,
        movement_type: impl Into<String>,
    ) -> Result<Self> {
        let id = id.into();
        let (first, last) = match (points.first(), points.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::Validation(format!("trial {id}: no samples"))),
        };
        if points.iter().any(|p| p.len() != first.len()) {
            return Err(Error::Validation(format!(
                "trial {id}: ragged sample dimensions"
            )));
        }
        let axis: Vec<f64> = last.iter().zip(first).map(|(l, f)| l - f).collect();
        let norm = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Validation(format!(
                "trial {id}: first and last samples coincide; no movement axis"
            )));
        }
        let positions = points
            .iter()
            .map(|p| {
                p.iter()
                    .zip(first)
                    .zip(&axis)
                    .map(|((x, f), a)| (x - f) * a / norm)
                    .sum()
            })
            .collect();
        Self::new(id, times, positions, subject, movement_type)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn subject(&self) -> &str {
        &self.subject
    }

    pub fn movement_type(&self) -> &str {
        &self.movement_type
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Copy of this trial with every position shifted by `offset`.
    pub fn translated(&self, offset: f64) -> Self {
        Self {
            positions: self.positions.iter().map(|x| x + offset).collect(),
            ..self.clone()
        }
    }
}

/// Fast (feedforward) portion of a trial between detected onset and offset.
#[derive(Debug, Clone, PartialEq)]
pub struct BallisticSegment {
    onset_index: usize,
    peak_index: usize,
    offset_index: usize,
    task: MovementTask,
}

impl BallisticSegment {
    pub fn new(
        onset_index: usize,
        peak_index: usize,
        offset_index: usize,
        task: MovementTask,
    ) -> Result<Self> {
        if !(onset_index < peak_index && peak_index < offset_index) {
            return Err(Error::DegenerateSegment(format!(
                "need onset < peak < offset, got {onset_index} / {peak_index} / {offset_index}"
            )));
        }
        Ok(Self {
            onset_index,
            peak_index,
            offset_index,
            task,
        })
    }

    pub fn onset_index(&self) -> usize {
        self.onset_index
    }

    pub fn peak_index(&self) -> usize {
        self.peak_index
    }

    pub fn offset_index(&self) -> usize {
        self.offset_index
    }

    pub fn task(&self) -> &MovementTask {
        &self.task
    }

    /// Number of samples in the segment, both ends included.
    pub fn len(&self) -> usize {
        self.offset_index - self.onset_index + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

//! Closed-form sparse minimum-effort control for integrator chains.
//!
//! For a rest-to-rest movement of displacement `D` in time `T` through an
//! `n`-th order integrator, the control minimizing `sup |u(t)|` is bang-bang
//! with amplitude `4^(n-1) (n-1)! |D| / T^n` and switch times
//! `T sin^2(pi i / 2n)`, `i = 0..=n`. Everything here is exact arithmetic on
//! that structure: no numerical integration or optimization is involved.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::types::{
    check_order, BangBangSignal, Impulse, MovementTask, PiecewiseTrajectory, PolySegment, Sign,
    SpikeTrain, StateVector,
};

/// `4^(n-1) (n-1)!`, the amplitude of the unit rest-to-rest movement in unit time.
pub fn amplitude_factor(order: usize) -> Result<f64> {
    check_order(order)?;
    let factorial: f64 = (1..order).map(|k| k as f64).product();
    Ok(4f64.powi(order as i32 - 1) * factorial)
}

/// Magnitude of the optimal bang-bang amplitude. The sign of the first
/// interval is `sign(displacement)` and is carried separately.
pub fn optimal_amplitude(order: usize, displacement: f64, duration: f64) -> Result<f64> {
    let factor = amplitude_factor(order)?;
    check_duration(duration)?;
    if !displacement.is_finite() {
        return Err(Error::invalid("displacement must be finite"));
    }
    Ok(factor * displacement.abs() / duration.powi(order as i32))
}

/// Optimal switch times `T sin^2(pi i / 2n)` for `i = 0..=n`.
///
/// The upper half is mirrored from the lower half so that
/// `t_i + t_(n-i) = T` holds to rounding.
pub fn switch_times(order: usize, duration: f64) -> Result<Vec<f64>> {
    check_order(order)?;
    check_duration(duration)?;
    let mut times = vec![0.0; order + 1];
    for i in 0..=order {
        times[i] = if 2 * i < order {
            let s = (PI * i as f64 / (2 * order) as f64).sin();
            duration * s * s
        } else if 2 * i == order {
            duration / 2.0
        } else {
            duration - times[order - i]
        };
    }
    times[0] = 0.0;
    times[order] = duration;
    Ok(times)
}

fn check_duration(duration: f64) -> Result<()> {
    if duration.is_finite() && duration > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "duration must be positive, got {duration}"
        )))
    }
}

/// The L-infinity optimal control for `task` through an `order`-th integrator.
pub fn sparse_min_effort_signal(task: &MovementTask, order: usize) -> Result<BangBangSignal> {
    let amplitude = optimal_amplitude(order, task.displacement(), task.duration())?;
    let times = switch_times(order, task.duration())?;
    BangBangSignal::new(amplitude, times, Sign::of(task.displacement()))
}

/// Weight convention for spike-train encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SpikeEncoding {
    /// Weight `first_sign * K * (-1)^i` at every switch time, as the spike
    /// sequence is usually written. Does not integrate back to the signal.
    Paper,
    /// The actual jump of `u` at each switch: `K` at the ends, `2K` inside.
    /// Cumulative summation reconstructs the signal exactly.
    #[default]
    Derivative,
}

impl std::str::FromStr for SpikeEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::Paper),
            "derivative" => Ok(Self::Derivative),
            other => Err(Error::invalid(format!(
                "unknown spike encoding '{other}' (expected paper or derivative)"
            ))),
        }
    }
}

/// Encodes a bang-bang signal as a train of signed impulses at its switch times.
pub fn encode_spike_train(signal: &BangBangSignal, mode: SpikeEncoding) -> Result<SpikeTrain> {
    let duration = signal.duration();
    if signal.is_zero() {
        return SpikeTrain::new(Vec::new(), duration);
    }
    let times = signal.switch_times();
    let last = times.len() - 1;
    let impulses = times
        .iter()
        .enumerate()
        .map(|(i, &time)| {
            let weight = match mode {
                SpikeEncoding::Paper => {
                    let alternation = if i % 2 == 0 { 1.0 } else { -1.0 };
                    signal.first_sign().as_f64() * alternation * signal.amplitude()
                }
                SpikeEncoding::Derivative => {
                    let before = if i == 0 {
                        0.0
                    } else {
                        signal.interval_value(i - 1)
                    };
                    let after = if i == last {
                        0.0
                    } else {
                        signal.interval_value(i)
                    };
                    after - before
                }
            };
            Impulse { time, weight }
        })
        .collect();
    SpikeTrain::new(impulses, duration)
}

/// Rebuilds a bang-bang signal by cumulative summation of derivative-mode
/// impulse weights.
///
/// Fails when the running sum does not alternate between `+K` and `-K` or
/// does not return to zero at the final impulse, which is what a paper-mode
/// train produces.
pub fn decode_spike_train(spikes: &SpikeTrain, duration: f64) -> Result<BangBangSignal> {
    check_duration(duration)?;
    let impulses = spikes.impulses();
    if impulses.is_empty() {
        return BangBangSignal::zero(duration);
    }
    if impulses.len() < 2 {
        return Err(Error::Decode(
            "a single impulse never returns to zero".into(),
        ));
    }
    let first = impulses[0];
    if first.time != 0.0 {
        return Err(Error::Decode(format!(
            "first impulse at t = {} instead of 0",
            first.time
        )));
    }
    let amplitude = first.weight.abs();
    if amplitude == 0.0 {
        return Err(Error::Decode("first impulse has zero weight".into()));
    }
    let first_sign = Sign::of(first.weight);
    let tol = 1e-12 * amplitude;
    let mut level = first.weight;
    for (i, imp) in impulses.iter().enumerate().skip(1) {
        level += imp.weight;
        let expected = if i + 1 == impulses.len() {
            0.0
        } else {
            let alternation = if i % 2 == 0 { 1.0 } else { -1.0 };
            first_sign.as_f64() * alternation * amplitude
        };
        if (level - expected).abs() > tol {
            return Err(Error::Decode(format!(
                "cumulative level {level} after impulse {i} (t = {}), expected {expected}",
                imp.time
            )));
        }
    }
    let last = impulses[impulses.len() - 1].time;
    if last != duration {
        return Err(Error::Decode(format!(
            "last impulse at t = {last}, signal duration is {duration}"
        )));
    }
    let times = impulses.iter().map(|imp| imp.time).collect();
    BangBangSignal::new(amplitude, times, first_sign).map_err(|e| Error::Decode(e.to_string()))
}

/// Integrates a bang-bang signal through an `order`-th integrator starting
/// at rest at `x_start`.
pub fn integrate_trajectory(
    signal: &BangBangSignal,
    order: usize,
    x_start: f64,
) -> Result<PiecewiseTrajectory> {
    integrate_from_state(signal, order, &StateVector::at_rest(order, x_start))
}

/// Integrates a bang-bang signal from an arbitrary initial state.
///
/// On each constant-control interval the position is the degree-`order`
/// polynomial with Taylor coefficients `x_k / k!` plus `u / order!`; the
/// state at the interval end seeds the next one.
pub fn integrate_from_state(
    signal: &BangBangSignal,
    order: usize,
    initial: &StateVector,
) -> Result<PiecewiseTrajectory> {
    check_order(order)?;
    if signal.interval_count() != order {
        return Err(Error::OrderMismatch {
            expected: order,
            actual: signal.interval_count(),
        });
    }
    if initial.len() != order {
        return Err(Error::OrderMismatch {
            expected: order,
            actual: initial.len(),
        });
    }
    let mut state = initial.as_slice().to_vec();
    let times = signal.switch_times();
    let mut segments = Vec::with_capacity(order);
    for i in 0..order {
        let u = signal.interval_value(i);
        let mut coeffs = Vec::with_capacity(order + 1);
        let mut factorial = 1.0;
        for (k, x) in state.iter().enumerate() {
            if k > 0 {
                factorial *= k as f64;
            }
            coeffs.push(x / factorial);
        }
        coeffs.push(u / (factorial * order as f64));
        let seg = PolySegment {
            start: times[i],
            end: times[i + 1],
            coeffs,
        };
        let h = seg.end - seg.start;
        for (d, x) in state.iter_mut().enumerate() {
            *x = seg.derivative(h, d);
        }
        segments.push(seg);
    }
    PiecewiseTrajectory::new(order, segments)
}

/// Sparse optimal trajectory for `task` (signal plus exact integration).
pub fn sparse_trajectory(task: &MovementTask, order: usize) -> Result<PiecewiseTrajectory> {
    let signal = sparse_min_effort_signal(task, order)?;
    integrate_trajectory(&signal, order, task.x_start())
}

/// Shortest duration reaching `displacement` when `|u| <= bound`: the
/// duration at which the optimal amplitude equals the bound.
pub fn minimum_time(order: usize, displacement: f64, bound: f64) -> Result<f64> {
    let factor = amplitude_factor(order)?;
    if !displacement.is_finite() || !bound.is_finite() || bound < 0.0 {
        return Err(Error::invalid(
            "displacement and bound must be finite, bound >= 0",
        ));
    }
    if displacement == 0.0 {
        return Ok(0.0);
    }
    if bound == 0.0 {
        return Err(Error::Infeasible(
            "zero control bound cannot produce a nonzero displacement".into(),
        ));
    }
    Ok((factor * displacement.abs() / bound).powf(1.0 / order as f64))
}

/// Classical minimum-jerk (L2) rest-to-rest trajectory:
/// `x_i + D (10 s^3 - 15 s^4 + 6 s^5)` with `s = t / T`.
pub fn min_jerk_l2_trajectory(task: &MovementTask) -> Result<PiecewiseTrajectory> {
    let d = task.displacement();
    let t = task.duration();
    let coeffs = vec![
        task.x_start(),
        0.0,
        0.0,
        10.0 * d / t.powi(3),
        -15.0 * d / t.powi(4),
        6.0 * d / t.powi(5),
    ];
    PiecewiseTrajectory::new(
        3,
        vec![PolySegment {
            start: 0.0,
            end: t,
            coeffs,
        }],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use SpikeEncoding::{Derivative, Paper};

    /// Forward-Euler integration of the chain on a fine grid. Independent of
    /// the polynomial propagation above; first-order accurate in the step.
    fn euler_oracle(signal: &BangBangSignal, order: usize, steps: usize) -> Vec<f64> {
        let dt = signal.duration() / steps as f64;
        let mut x = vec![0.0; order];
        for k in 0..steps {
            let t = (k as f64 + 0.5) * dt;
            let u = signal.value_at(t);
            let prev = x.clone();
            for j in 0..order {
                let rate = if j + 1 < order { prev[j + 1] } else { u };
                x[j] += rate * dt;
            }
        }
        x
    }

    #[test]
    fn amplitude_examples() {
        assert_eq!(optimal_amplitude(1, 5.0, 2.0).unwrap(), 2.5);
        assert_eq!(optimal_amplitude(2, 1.0, 1.0).unwrap(), 4.0);
        assert_eq!(optimal_amplitude(3, 1.0, 1.0).unwrap(), 32.0);
        assert_eq!(optimal_amplitude(4, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(optimal_amplitude(3, -1.0, 1.0).unwrap(), 32.0);
    }

    #[test]
    fn amplitude_errors() {
        assert!(matches!(
            optimal_amplitude(0, 1.0, 1.0),
            Err(Error::OrderOutOfRange(0))
        ));
        assert!(matches!(
            optimal_amplitude(13, 1.0, 1.0),
            Err(Error::OrderOutOfRange(13))
        ));
        assert!(optimal_amplitude(3, 1.0, 0.0).is_err());
        assert!(optimal_amplitude(3, 1.0, -2.0).is_err());
    }

    #[test]
    fn n2_hand_integration_oracle() {
        // Accelerate at K for T/2, decelerate for T/2: D = 2 * (K (T/2)^2 / 2) = K T^2 / 4.
        let (d, t) = (1.0, 1.0);
        let k_hand = 4.0 * d / (t * t);
        assert_eq!(optimal_amplitude(2, d, t).unwrap(), k_hand);
    }

    #[test]
    fn n3_piecewise_oracle_reaches_target() {
        let signal = BangBangSignal::new(32.0, vec![0.0, 0.25, 0.75, 1.0], Sign::Positive).unwrap();
        let x = euler_oracle(&signal, 3, 400_000);
        assert!((x[0] - 1.0).abs() < 1e-4, "{x:?}");
        assert!(x[1].abs() < 1e-3 && x[2].abs() < 1e-3);
    }

    #[test]
    fn switch_time_examples() {
        let s3 = switch_times(3, 1.0).unwrap();
        for (got, want) in s3.iter().zip([0.0, 0.25, 0.75, 1.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-15);
        }
        assert_eq!(switch_times(2, 2.0).unwrap(), vec![0.0, 1.0, 2.0]);
        for n in 1..=12 {
            let s = switch_times(n, 3.7).unwrap();
            assert_eq!(s.len(), n + 1);
            assert_eq!(s[0], 0.0);
            assert_eq!(s[n], 3.7);
        }
        assert!(switch_times(0, 1.0).is_err());
    }

    #[test]
    fn sparse_signal_examples() {
        let up = sparse_min_effort_signal(&MovementTask::new(0.0, 1.0, 1.0).unwrap(), 3).unwrap();
        assert_eq!(up.amplitude(), 32.0);
        assert_eq!(up.first_sign(), Sign::Positive);
        let signs: Vec<f64> = (0..3).map(|i| up.interval_value(i).signum()).collect();
        assert_eq!(signs, vec![1.0, -1.0, 1.0]);

        let down = sparse_min_effort_signal(&MovementTask::new(1.0, 0.0, 1.0).unwrap(), 3).unwrap();
        assert_eq!(down.amplitude(), 32.0);
        assert_eq!(down.first_sign(), Sign::Negative);
        assert_eq!(down.switch_times(), up.switch_times());

        let still =
            sparse_min_effort_signal(&MovementTask::new(0.0, 0.0, 1.0).unwrap(), 5).unwrap();
        assert!(still.is_zero());
        assert_eq!(still.first_sign(), Sign::Positive);
    }

    #[test]
    fn spike_encoding_examples() {
        let signal =
            sparse_min_effort_signal(&MovementTask::new(0.0, 1.0, 1.0).unwrap(), 3).unwrap();
        let paper = encode_spike_train(&signal, Paper).unwrap();
        let weights: Vec<f64> = paper.impulses().iter().map(|s| s.weight).collect();
        assert_eq!(weights, vec![32.0, -32.0, 32.0, -32.0]);

        let deriv = encode_spike_train(&signal, Derivative).unwrap();
        let weights: Vec<f64> = deriv.impulses().iter().map(|s| s.weight).collect();
        assert_eq!(weights, vec![32.0, -64.0, 64.0, -32.0]);

        let zero = sparse_min_effort_signal(&MovementTask::new(0.0, 0.0, 1.0).unwrap(), 3).unwrap();
        assert!(encode_spike_train(&zero, Paper).unwrap().is_empty());
        assert!(encode_spike_train(&zero, Derivative).unwrap().is_empty());
    }

    #[test]
    fn decode_round_trip_and_failures() {
        for n in 1..=6 {
            let task = MovementTask::new(0.3, -1.7, 0.8).unwrap();
            let signal = sparse_min_effort_signal(&task, n).unwrap();
            let spikes = encode_spike_train(&signal, Derivative).unwrap();
            assert_eq!(decode_spike_train(&spikes, 0.8).unwrap(), signal);
        }
        let empty = SpikeTrain::new(vec![], 2.0).unwrap();
        let decoded = decode_spike_train(&empty, 2.0).unwrap();
        assert!(decoded.is_zero());
        assert_eq!(decoded.duration(), 2.0);

        let signal =
            sparse_min_effort_signal(&MovementTask::new(0.0, 1.0, 1.0).unwrap(), 3).unwrap();
        let paper = encode_spike_train(&signal, Paper).unwrap();
        assert!(matches!(
            decode_spike_train(&paper, 1.0),
            Err(Error::Decode(_))
        ));
    }

    #[test]
    fn n3_trajectory_midpoint_and_peak_speed() {
        let task = MovementTask::new(0.0, 1.0, 1.0).unwrap();
        let traj = sparse_trajectory(&task, 3).unwrap();
        // x(1/2) = 1/12 + 1/2 - 1/12 by hand integration.
        assert_relative_eq!(traj.position(0.5), 0.5, epsilon = 1e-12);
        // v(1/2) = 1 + 8/4 - 16/16 = 2.
        assert_relative_eq!(traj.velocity(0.5), 2.0, epsilon = 1e-12);
        assert_relative_eq!(traj.position(1.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_signal_holds_position() {
        let task = MovementTask::new(0.4, 0.4, 1.0).unwrap();
        let traj = sparse_trajectory(&task, 4).unwrap();
        for t in [0.0, 0.3, 0.7, 1.0] {
            assert_eq!(traj.position(t), 0.4);
            assert_eq!(traj.velocity(t), 0.0);
        }
    }

    #[test]
    fn integrate_rejects_order_mismatch() {
        let signal =
            sparse_min_effort_signal(&MovementTask::new(0.0, 1.0, 1.0).unwrap(), 3).unwrap();
        assert!(matches!(
            integrate_trajectory(&signal, 4, 0.0),
            Err(Error::OrderMismatch {
                expected: 4,
                actual: 3
            })
        ));
    }

    #[test]
    fn minimum_time_examples() {
        assert_relative_eq!(minimum_time(2, 1.0, 4.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(minimum_time(1, 5.0, 2.5).unwrap(), 2.0, epsilon = 1e-15);
        assert_relative_eq!(minimum_time(3, 1.0, 32.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(minimum_time(3, 0.0, 0.0).unwrap(), 0.0);
        assert!(matches!(
            minimum_time(3, 1.0, 0.0),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn quintic_examples() {
        let task = MovementTask::new(0.2, 1.2, 2.0).unwrap();
        let traj = min_jerk_l2_trajectory(&task).unwrap();
        assert_relative_eq!(traj.position(1.0), 0.7, epsilon = 1e-12);
        // Peak of 30 s^2 - 60 s^3 + 30 s^4 is 30/16 at s = 1/2.
        assert_relative_eq!(traj.velocity(1.0), 1.875 * 1.0 / 2.0, epsilon = 1e-12);
        assert_eq!(traj.position(0.0), 0.2);
        assert_relative_eq!(traj.position(2.0), 1.2, epsilon = 1e-12);
        for d in 1..=2 {
            assert_eq!(traj.derivative(0.0, d), 0.0);
            assert!(traj.derivative(2.0, d).abs() < 1e-12);
        }
    }
}

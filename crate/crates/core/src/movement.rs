//! Ballistic-segment extraction from reaching trials, and synthetic trials.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::eval::ModelSpec;
use crate::io::{read_manifest, read_trial};
use crate::types::{BallisticSegment, MovementTask, SampledSeries, Trial};

pub const DEFAULT_SMOOTH_WINDOW: usize = 5;
pub const DEFAULT_THRESHOLD: f64 = 0.05;

/// Segments shorter than this are flagged as outliers.
pub const MIN_SEGMENT_DURATION: f64 = 0.05;

/// Trials loaded from a manifest, plus the files that failed.
#[derive(Debug, Default)]
pub struct LoadReport {
    pub trials: Vec<Trial>,
    pub failures: Vec<LoadFailure>,
}

#[derive(Debug)]
pub struct LoadFailure {
    pub id: String,
    pub path: PathBuf,
    pub error: Error,
}

/// Loads every trial listed in a manifest. A broken manifest is an error; a
/// broken trial file is recorded in `failures` and the rest still load.
pub fn load_trials(manifest: &Path) -> Result<LoadReport> {
    let mut report = LoadReport::default();
    for entry in read_manifest(manifest)? {
        let path = entry.resolve(manifest);
        let id = entry.id();
        match read_trial(&path, id.clone(), &entry.subject, &entry.movement_type) {
            Ok(trial) => report.trials.push(trial),
            Err(error) => report.failures.push(LoadFailure { id, path, error }),
        }
    }
    Ok(report)
}

/// Finite-difference velocity (central inside, one-sided at the ends),
/// smoothed by a centered moving average of odd width `smooth_window`. Near
/// the ends the window shrinks symmetrically so it stays centered.
pub fn velocity_profile(trial: &Trial, smooth_window: usize) -> Result<SampledSeries> {
    let n = trial.len();
    if smooth_window.is_multiple_of(2) || smooth_window >= n {
        return Err(Error::invalid(format!(
            "smoothing window must be odd, >= 1 and below the sample count {n}, got {smooth_window}"
        )));
    }
    let (t, x) = (trial.times(), trial.positions());
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (x[b] - x[a]) / (t[b] - t[a])
        })
        .collect();
    let half = smooth_window / 2;
    let smoothed = (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            raw[i - h..=i + h].iter().sum::<f64>() / (2 * h + 1) as f64
        })
        .collect();
    SampledSeries::new(t.to_vec(), smoothed)
}

/// Onset, peak and offset sample indices of the fastest movement in a
/// velocity series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Detection {
    pub onset: usize,
    pub peak: usize,
    pub offset: usize,
    /// The backward scan reached the first sample without crossing the threshold.
    pub onset_clamped: bool,
    /// The forward scan reached the last sample without crossing the threshold.
    pub offset_clamped: bool,
}

/// Peak-then-threshold detection: from the global speed maximum (earliest on
/// ties), scan outward to the nearest samples whose speed is below
/// `threshold_frac` times the peak.
pub fn detect_ballistic(v: &SampledSeries, threshold_frac: f64) -> Result<Detection> {
    if !(threshold_frac > 0.0 && threshold_frac < 1.0) {
        return Err(Error::invalid(format!(
            "threshold fraction must lie in (0, 1), got {threshold_frac}"
        )));
    }
    let speed: Vec<f64> = v.values().iter().map(|x| x.abs()).collect();
    let mut peak = 0;
    for (i, &s) in speed.iter().enumerate() {
        if s > speed[peak] {
            peak = i;
        }
    }
    if speed.is_empty() || speed[peak] == 0.0 {
        return Err(Error::NoMovement);
    }
    let level = threshold_frac * speed[peak];
    let onset = (0..peak).rev().find(|&i| speed[i] < level);
    let offset = (peak + 1..speed.len()).find(|&i| speed[i] < level);
    Ok(Detection {
        onset: onset.unwrap_or(0),
        peak,
        offset: offset.unwrap_or(speed.len() - 1),
        onset_clamped: onset.is_none(),
        offset_clamped: offset.is_none(),
    })
}

/// The movement task spanned by samples `onset..=offset`.
pub fn task_from_segment(trial: &Trial, onset: usize, offset: usize) -> Result<MovementTask> {
    if offset >= trial.len() {
        return Err(Error::invalid(format!(
            "offset {offset} beyond trial of {} samples",
            trial.len()
        )));
    }
    if offset < onset + 2 {
        return Err(Error::DegenerateSegment(format!(
            "samples {onset}..={offset} span fewer than three samples"
        )));
    }
    let (t, x) = (trial.times(), trial.positions());
    MovementTask::new(x[onset], x[offset], t[offset] - t[onset])
}

/// Why a trial is treated as an outlier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutlierFlag {
    OnsetClamped,
    OffsetClamped,
    ShortSegment,
}

impl OutlierFlag {
    pub fn reason(self) -> &'static str {
        match self {
            OutlierFlag::OnsetClamped => "onset scan reached the start of the trial",
            OutlierFlag::OffsetClamped => "offset scan reached the end of the trial",
            OutlierFlag::ShortSegment => "segment shorter than 50 ms",
        }
    }
}

impl fmt::Display for OutlierFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutlierFlag::OnsetClamped => "onset_clamped",
            OutlierFlag::OffsetClamped => "offset_clamped",
            OutlierFlag::ShortSegment => "short_segment",
        })
    }
}

/// Detected segment of one trial.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub segment: BallisticSegment,
    pub velocity: SampledSeries,
    pub flags: Vec<OutlierFlag>,
}

impl Extraction {
    pub fn is_outlier(&self) -> bool {
        !self.flags.is_empty()
    }
}

/// Velocity, detection and task extraction for one trial.
pub fn extract_segment(
    trial: &Trial,
    smooth_window: usize,
    threshold_frac: f64,
) -> Result<Extraction> {
    let velocity = velocity_profile(trial, smooth_window)?;
    let det = detect_ballistic(&velocity, threshold_frac)?;
    let task = task_from_segment(trial, det.onset, det.offset)?;
    let segment = BallisticSegment::new(det.onset, det.peak, det.offset, task)?;
    let mut flags = Vec::new();
    if det.onset_clamped {
        flags.push(OutlierFlag::OnsetClamped);
    }
    if det.offset_clamped {
        flags.push(OutlierFlag::OffsetClamped);
    }
    if segment.task().duration() < MIN_SEGMENT_DURATION {
        flags.push(OutlierFlag::ShortSegment);
    }
    Ok(Extraction {
        segment,
        velocity,
        flags,
    })
}

/// Sampling and noise settings for [`synthesize_trial`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOptions {
    pub model: ModelSpec,
    /// Standard deviation of additive position noise (m).
    pub noise_std: f64,
    /// Sampling rate (Hz).
    pub rate: f64,
    /// Rest before the movement (s).
    pub pre_pad: f64,
    /// Rest after the movement (s).
    pub post_pad: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            model: ModelSpec::Sparse(3),
            noise_std: 0.0,
            rate: 1000.0,
            pre_pad: 0.0,
            post_pad: 0.0,
        }
    }
}

/// Samples the model trajectory at `k / rate`, at rest during the padding,
/// and adds independent Gaussian position noise.
pub fn synthesize_trial<R: Rng + ?Sized>(
    id: impl Into<String>,
    task: &MovementTask,
    options: &SynthesisOptions,
    subject: impl Into<String>,
    movement_type: impl Into<String>,
    rng: &mut R,
) -> Result<Trial> {
    let SynthesisOptions {
        model,
        noise_std,
        rate,
        pre_pad,
        post_pad,
    } = *options;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::invalid(format!(
            "sampling rate must be positive, got {rate}"
        )));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::invalid(format!(
            "noise std must be >= 0, got {noise_std}"
        )));
    }
    if !(pre_pad >= 0.0 && post_pad >= 0.0) {
        return Err(Error::invalid("padding must be >= 0"));
    }
    let trajectory = model.trajectory(task)?;
    let total = pre_pad + task.duration() + post_pad;
    let last = (total * rate * (1.0 + 1e-12)).floor() as usize;
    let times: Vec<f64> = (0..=last).map(|k| k as f64 / rate).collect();
    let mut positions: Vec<f64> = times
        .iter()
        .map(|&t| {
            let s = t - pre_pad;
            if s < 0.0 {
                task.x_start()
            } else if s > task.duration() {
                task.x_end()
            } else {
                trajectory.position(s)
            }
        })
        .collect();
    if noise_std > 0.0 {
        let noise = Normal::new(0.0, noise_std).map_err(|e| Error::invalid(e.to_string()))?;
        for x in &mut positions {
            *x += noise.sample(rng);
        }
    }
    Trial::new(id, times, positions, subject, movement_type)
}

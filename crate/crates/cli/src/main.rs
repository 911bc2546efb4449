//! `sparse-effort`: generate, solve and evaluate sparse minimum-effort
//! movement models from the command line.
//!
//! Exit codes: 0 success, 2 usage or invalid parameters, 3 solver failure,
//! 4 data errors.

mod svg;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sparse_effort::analytic::{
    decode_spike_train, encode_spike_train, integrate_trajectory, sparse_min_effort_signal,
    SpikeEncoding,
};
use sparse_effort::eval::{
    aggregate, compare_models, score_velocity, wilcoxon_rank_sum, Comparison, ModelFitResult,
    ModelSpec, COMPARISON_HEADER, RESULTS_HEADER,
};
use sparse_effort::io::{self, FlagRecord, ManifestEntry, SolveSummary, FLAG_HEADER};
use sparse_effort::movement::{
    extract_segment, load_trials, synthesize_trial, Extraction, SynthesisOptions,
    DEFAULT_SMOOTH_WINDOW, DEFAULT_THRESHOLD,
};
use sparse_effort::numeric::{
    solve_min_effort_l2, solve_min_effort_linf, solve_soft_terminal, SoftTerminalOptions,
    SolveReport, SolveStatus, DEFAULT_STEPS,
};
use sparse_effort::{
    BangBangSignal, Error, IntegratorChain, MovementTask, PiecewiseTrajectory, StateVector, Trial,
};

#[derive(Parser)]
#[command(
    name = "sparse-effort",
    version,
    about = "Sparse minimum-effort control of integrator chains"
)]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Also write an SVG plot.
    #[arg(long, global = true)]
    svg: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct TaskArgs {
    /// Chain order (3 = jerk, 4 = snap, ...).
    #[arg(long)]
    n: usize,
    /// Displacement (m).
    #[arg(long = "D", allow_hyphen_values = true)]
    d: f64,
    /// Duration (s).
    #[arg(long = "T")]
    t: f64,
    /// Start position (m).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    x0: f64,
}

impl TaskArgs {
    fn task(&self) -> sparse_effort::Result<MovementTask> {
        MovementTask::new(self.x0, self.x0 + self.d, self.t)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form sparse control: signal, both spike encodings, trajectory.
    Generate {
        #[command(flatten)]
        task: TaskArgs,
        /// Trajectory samples.
        #[arg(long, default_value_t = 501)]
        samples: usize,
    },
    /// Encode the closed-form control as a spike train.
    Encode {
        #[command(flatten)]
        task: TaskArgs,
        /// `derivative` (exact jumps, decodable) or `paper` (alternating ±K).
        #[arg(long, default_value = "derivative")]
        mode: SpikeEncoding,
    },
    /// Discretized solve: L-infinity LP (default), L2, or soft terminal.
    Solve {
        #[command(flatten)]
        task: TaskArgs,
        /// Control steps.
        #[arg(long = "N", default_value_t = DEFAULT_STEPS)]
        steps: usize,
        /// Minimum-L2 control instead of the LP.
        #[arg(long, conflicts_with = "soft")]
        l2: bool,
        /// Soft terminal constraint with this effort weight.
        #[arg(long)]
        soft: Option<f64>,
    },
    /// Integrate a signal or spike-train CSV through the chain.
    Simulate {
        /// Signal CSV (`t_start,t_end,u`).
        #[arg(long, required_unless_present = "spikes")]
        signal: Option<PathBuf>,
        /// Derivative-mode spike CSV (`t,weight`); needs --T.
        #[arg(long, conflicts_with = "signal", requires = "duration")]
        spikes: Option<PathBuf>,
        #[arg(long = "T")]
        duration: Option<f64>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x0: f64,
        #[arg(long, default_value_t = 501)]
        samples: usize,
    },
    /// Synthetic trials plus a manifest.
    Synthesize {
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long = "D", default_value_t = 0.1, allow_hyphen_values = true)]
        d: f64,
        #[arg(long = "T", default_value_t = 0.33)]
        t: f64,
        /// Generating model: sparse-n<k> or quintic-l2.
        #[arg(long, default_value = "sparse-n3")]
        model: ModelSpec,
        /// Position noise standard deviation (m).
        #[arg(long, default_value_t = 1e-3)]
        noise: f64,
        /// Sampling rate (Hz).
        #[arg(long, default_value_t = 1000.0)]
        rate: f64,
        /// Rest before and after the movement (s).
        #[arg(long, default_value_t = 0.1)]
        pad: f64,
        /// Trials are assigned round-robin to this many subjects.
        #[arg(long, default_value_t = 1)]
        subjects: usize,
    },
    /// Detect segments, score models, aggregate and test.
    Analyze {
        #[arg(long)]
        manifest: PathBuf,
        /// Comma-separated models.
        #[arg(long, value_delimiter = ',', default_value = "sparse-n3,quintic-l2")]
        models: Vec<ModelSpec>,
        #[command(flatten)]
        detection: DetectionArgs,
    },
    /// Rank-sum tests between models from a per-trial scores CSV.
    Compare {
        #[arg(long)]
        scores: PathBuf,
        /// Models to compare; default is every model in the file.
        #[arg(long, value_delimiter = ',')]
        models: Vec<ModelSpec>,
    },
}

#[derive(Args, Clone, Copy)]
struct DetectionArgs {
    /// Onset/offset threshold as a fraction of peak speed.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Velocity smoothing window (odd sample count).
    #[arg(long, default_value_t = DEFAULT_SMOOTH_WINDOW)]
    window: usize,
    /// Samples excluded from the MSE at each segment end.
    #[arg(long, default_value_t = 1)]
    exclude: usize,
}

enum Failure {
    Lib(Error),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_solver_failure() {
                3
            } else if e.is_data_error() {
                4
            } else {
                2
            })
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    fs::create_dir_all(&cli.out).map_err(|e| Error::Io {
        path: cli.out.clone(),
        source: e,
    })?;
    match &cli.command {
        Command::Generate { task, samples } => generate(cli, task, *samples),
        Command::Encode { task, mode } => encode(cli, task, *mode),
        Command::Solve {
            task,
            steps,
            l2,
            soft,
        } => solve(cli, task, *steps, *l2, *soft),
        Command::Simulate {
            signal,
            spikes,
            duration,
            n,
            x0,
            samples,
        } => simulate(
            cli,
            signal.as_deref(),
            spikes.as_deref(),
            *duration,
            *n,
            *x0,
            *samples,
        ),
        Command::Synthesize {
            count,
            d,
            t,
            model,
            noise,
            rate,
            pad,
            subjects,
        } => {
            let options = SynthesisOptions {
                model: *model,
                noise_std: *noise,
                rate: *rate,
                pre_pad: *pad,
                post_pad: *pad,
            };
            synthesize(
                cli,
                *count,
                &MovementTask::new(0.0, *d, *t)?,
                &options,
                *subjects,
            )
        }
        Command::Analyze {
            manifest,
            models,
            detection,
        } => analyze(cli, manifest, models, detection),
        Command::Compare { scores, models } => compare(cli, scores, models),
    }
}

fn write_svg(path: &Path, content: &str) -> CmdResult {
    fs::write(path, content).map_err(|e| {
        Failure::Lib(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn signal_points(signal: &BangBangSignal) -> Vec<(f64, f64)> {
    let times = signal.switch_times();
    let mut points: Vec<(f64, f64)> = (0..signal.interval_count())
        .map(|i| (times[i], signal.interval_value(i)))
        .collect();
    points.push((
        signal.duration(),
        signal.interval_value(signal.interval_count() - 1),
    ));
    points
}

fn trajectory_panel(
    trajectory: &PiecewiseTrajectory,
    samples: usize,
) -> sparse_effort::Result<svg::Panel> {
    let table = trajectory.sample_table(samples, 1)?;
    let series = ["x", "v"]
        .iter()
        .enumerate()
        .map(|(c, name)| svg::Series {
            label: name.to_string(),
            points: table
                .times
                .iter()
                .copied()
                .zip(table.columns[c].iter().copied())
                .collect(),
            step: false,
        })
        .collect();
    Ok(svg::Panel {
        title: "trajectory".into(),
        series,
    })
}

fn generate(cli: &Cli, args: &TaskArgs, samples: usize) -> CmdResult {
    let task = args.task()?;
    let signal = sparse_min_effort_signal(&task, args.n)?;
    let trajectory = integrate_trajectory(&signal, args.n, task.x_start())?;
    io::write_signal(&cli.out.join("signal.csv"), &signal)?;
    for (mode, name) in [
        (SpikeEncoding::Paper, "spikes_paper.csv"),
        (SpikeEncoding::Derivative, "spikes_derivative.csv"),
    ] {
        io::write_spikes(&cli.out.join(name), &encode_spike_train(&signal, mode)?)?;
    }
    io::write_trajectory(
        &cli.out.join("trajectory.csv"),
        &trajectory.sample_table(samples, args.n)?,
    )?;
    let times: Vec<String> = signal
        .switch_times()
        .iter()
        .map(|&t| io::format_float(t))
        .collect();
    println!("K={}", io::format_float(signal.amplitude()));
    println!("switch_times={}", times.join(","));
    if cli.svg {
        let panels = [
            svg::Panel {
                title: format!("u(t), n = {}", args.n),
                series: vec![svg::Series {
                    label: "u".into(),
                    points: signal_points(&signal),
                    step: true,
                }],
            },
            trajectory_panel(&trajectory, samples)?,
        ];
        write_svg(&cli.out.join("generate.svg"), &svg::line_panels(&panels))?;
    }
    Ok(())
}

fn encode(cli: &Cli, args: &TaskArgs, mode: SpikeEncoding) -> CmdResult {
    let task = args.task()?;
    let signal = sparse_min_effort_signal(&task, args.n)?;
    let spikes = encode_spike_train(&signal, mode)?;
    io::write_spikes(&cli.out.join("spikes.csv"), &spikes)?;
    println!("spikes={}", spikes.len());
    if mode == SpikeEncoding::Derivative {
        let exact = decode_spike_train(&spikes, signal.duration())? == signal;
        println!("round_trip_exact={exact}");
    }
    if cli.svg {
        let stems = spikes
            .impulses()
            .iter()
            .flat_map(|s| [(s.time, 0.0), (s.time, s.weight), (s.time, 0.0)])
            .collect();
        let panel = svg::Panel {
            title: format!("spike train ({mode:?})"),
            series: vec![svg::Series {
                label: "weight".into(),
                points: stems,
                step: false,
            }],
        };
        write_svg(&cli.out.join("encode.svg"), &svg::line_panels(&[panel]))?;
    }
    Ok(())
}

fn solve(cli: &Cli, args: &TaskArgs, steps: usize, l2: bool, soft: Option<f64>) -> CmdResult {
    let task = args.task()?;
    let chain = IntegratorChain::new(args.n)?;
    let report: SolveReport = match soft {
        Some(w) => solve_soft_terminal(
            &chain,
            &StateVector::at_rest(args.n, task.x_start()),
            &StateVector::at_rest(args.n, task.x_end()),
            w,
            task.duration(),
            steps,
            SoftTerminalOptions::default(),
        )?,
        None if l2 => solve_min_effort_l2(&chain, &task, steps)?,
        None => solve_min_effort_linf(&chain, &task, steps)?,
    };
    io::write_controls(&cli.out.join("solve_controls.csv"), &report)?;
    io::write_records(
        &cli.out.join("solve_summary.csv"),
        &[SolveSummary::from(&report)],
    )?;
    println!("K={}", io::format_float(report.bound));
    if let Some(split) = &report.soft {
        println!("K1={}", io::format_float(split.effort_cost));
        println!("K2={}", io::format_float(split.terminal_cost));
    }
    println!("status={}", report.status);
    if cli.svg {
        let mut points: Vec<(f64, f64)> = report
            .control
            .times()
            .iter()
            .copied()
            .zip(report.control.values().iter().copied())
            .collect();
        if let Some(&(_, last)) = points.last() {
            points.push((task.duration(), last));
        }
        let panel = svg::Panel {
            title: format!("discrete control, n = {}, N = {steps}", args.n),
            series: vec![svg::Series {
                label: "u".into(),
                points,
                step: true,
            }],
        };
        write_svg(&cli.out.join("solve.svg"), &svg::line_panels(&[panel]))?;
    }
    if report.status != SolveStatus::Optimal {
        return Err(Failure::Solver(format!(
            "solver stopped with status {}",
            report.status
        )));
    }
    Ok(())
}

fn simulate(
    cli: &Cli,
    signal: Option<&Path>,
    spikes: Option<&Path>,
    duration: Option<f64>,
    n: usize,
    x0: f64,
    samples: usize,
) -> CmdResult {
    let signal = match (signal, spikes, duration) {
        (Some(path), _, _) => io::read_signal(path)?,
        (None, Some(path), Some(t)) => decode_spike_train(&io::read_spikes(path, t)?, t)?,
        _ => {
            return Err(
                Error::InvalidParameter("need --signal, or --spikes with --T".into()).into(),
            )
        }
    };
    let trajectory = integrate_trajectory(&signal, n, x0)?;
    io::write_trajectory(
        &cli.out.join("trajectory.csv"),
        &trajectory.sample_table(samples, n)?,
    )?;
    let end = trajectory.state(signal.duration());
    let end: Vec<String> = end.iter().map(|&x| io::format_float(x)).collect();
    println!("terminal_state={}", end.join(","));
    if cli.svg {
        write_svg(
            &cli.out.join("simulate.svg"),
            &svg::line_panels(&[trajectory_panel(&trajectory, samples)?]),
        )?;
    }
    Ok(())
}

fn synthesize(
    cli: &Cli,
    count: usize,
    task: &MovementTask,
    options: &SynthesisOptions,
    subjects: usize,
) -> CmdResult {
    if subjects == 0 {
        return Err(Error::InvalidParameter("--subjects must be at least 1".into()).into());
    }
    let trial_dir = cli.out.join("trials");
    fs::create_dir_all(&trial_dir).map_err(|e| Error::Io {
        path: trial_dir.clone(),
        source: e,
    })?;
    let width = count.saturating_sub(1).to_string().len().max(3);
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut entries = Vec::with_capacity(count);
    for i in 0..count {
        let id = format!("trial_{i:0width$}");
        let subject = format!("s{}", i % subjects + 1);
        let trial = synthesize_trial(&id, task, options, &subject, "reach", &mut rng)?;
        io::write_trial(&trial_dir.join(format!("{id}.csv")), &trial)?;
        entries.push(ManifestEntry {
            file: format!("trials/{id}.csv"),
            subject,
            movement_type: "reach".into(),
        });
    }
    io::write_manifest(&cli.out.join("manifest.csv"), &entries)?;
    println!("trials={count}");
    Ok(())
}

/// Per-trial, per-model score row.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScoreRow {
    id: String,
    subject: String,
    movement_type: String,
    model: String,
    mse: f64,
    samples_used: usize,
}

const SCORE_HEADER: [&str; 6] = [
    "id",
    "subject",
    "movement_type",
    "model",
    "mse",
    "samples_used",
];

/// Detected segment of one trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SegmentRow {
    id: String,
    onset: usize,
    peak: usize,
    offset: usize,
    t_onset: f64,
    t_offset: f64,
    duration: f64,
    x_start: f64,
    x_end: f64,
    outlier: bool,
}

const SEGMENT_HEADER: [&str; 10] = [
    "id", "onset", "peak", "offset", "t_onset", "t_offset", "duration", "x_start", "x_end",
    "outlier",
];

fn write_table<T: Serialize>(
    path: &Path,
    rows: &[T],
    header: &[&str],
) -> sparse_effort::Result<()> {
    if rows.is_empty() {
        io::write_header(path, header)
    } else {
        io::write_records(path, rows)
    }
}

enum TrialOutcome {
    Scored(Extraction, Vec<ModelFitResult>),
    Failed(String, Error),
}

fn analyze(cli: &Cli, manifest: &Path, models: &[ModelSpec], det: &DetectionArgs) -> CmdResult {
    if models.is_empty() {
        return Err(Error::InvalidParameter("no models requested".into()).into());
    }
    let loaded = load_trials(manifest)?;
    let mut flags: Vec<FlagRecord> = loaded
        .failures
        .iter()
        .map(|f| {
            eprintln!("warning: {}: {}", f.id, f.error);
            FlagRecord {
                id: f.id.clone(),
                flag: "load_error".into(),
                reason: f.error.to_string(),
            }
        })
        .collect();

    let outcomes: Vec<TrialOutcome> = loaded
        .trials
        .par_iter()
        .map(|trial| score_trial(trial, models, det))
        .collect();

    let mut segments = Vec::new();
    let mut results = Vec::new();
    for (trial, outcome) in loaded.trials.iter().zip(outcomes) {
        match outcome {
            TrialOutcome::Failed(flag, error) => {
                eprintln!("warning: {}: {error}", trial.id());
                flags.push(FlagRecord {
                    id: trial.id().to_string(),
                    flag,
                    reason: error.to_string(),
                });
            }
            TrialOutcome::Scored(extraction, scores) => {
                segments.push(segment_row(trial, &extraction));
                for f in &extraction.flags {
                    flags.push(FlagRecord {
                        id: trial.id().to_string(),
                        flag: f.to_string(),
                        reason: f.reason().to_string(),
                    });
                }
                // Outliers are reported but kept out of the model comparison.
                if !extraction.is_outlier() {
                    results.extend(scores);
                }
            }
        }
    }

    let score_rows: Vec<ScoreRow> = results
        .iter()
        .map(|r| ScoreRow {
            id: r.trial_id.clone(),
            subject: r.subject.clone(),
            movement_type: r.movement_type.clone(),
            model: r.model.to_string(),
            mse: r.mse,
            samples_used: r.samples_used,
        })
        .collect();
    let (groups, comparisons) = if results.is_empty() {
        eprintln!("warning: no trials scored");
        (Vec::new(), Vec::new())
    } else {
        (aggregate(&results)?, compare_models(&results, models)?)
    };
    write_table(&cli.out.join("segments.csv"), &segments, &SEGMENT_HEADER)?;
    write_table(&cli.out.join("scores.csv"), &score_rows, &SCORE_HEADER)?;
    write_table(&cli.out.join("flagged.csv"), &flags, &FLAG_HEADER)?;
    write_table(&cli.out.join("results.csv"), &groups, &RESULTS_HEADER)?;
    write_table(
        &cli.out.join("comparison.csv"),
        &comparisons,
        &COMPARISON_HEADER,
    )?;

    let scored_trials = results.len() / models.len();
    println!("trials_loaded={}", loaded.trials.len());
    println!("trials_scored={scored_trials}");
    println!("trials_flagged={}", flags.len());
    for m in models {
        let mse: Vec<f64> = results
            .iter()
            .filter(|r| r.model == *m)
            .map(|r| r.mse)
            .collect();
        if !mse.is_empty() {
            println!(
                "mean_mse[{m}]={}",
                io::format_float(mse.iter().sum::<f64>() / mse.len() as f64)
            );
        }
    }
    for (a, b, wins) in pairwise_wins(&results, models) {
        println!("wins[{a} vs {b}]={wins}/{scored_trials}");
    }
    if cli.svg && !groups.is_empty() {
        write_svg(&cli.out.join("analyze.svg"), &bar_chart(&groups, models))?;
    }
    Ok(())
}

fn score_trial(trial: &Trial, models: &[ModelSpec], det: &DetectionArgs) -> TrialOutcome {
    let extraction = match extract_segment(trial, det.window, det.threshold) {
        Ok(e) => e,
        Err(e) => return TrialOutcome::Failed("detection_error".into(), e),
    };
    let scores: Result<Vec<_>, _> = models
        .iter()
        .map(|&m| {
            score_velocity(
                &extraction.segment,
                trial,
                &extraction.velocity,
                m,
                det.exclude,
            )
        })
        .collect();
    match scores {
        Ok(scores) => TrialOutcome::Scored(extraction, scores),
        Err(e) => TrialOutcome::Failed("scoring_error".into(), e),
    }
}

fn segment_row(trial: &Trial, extraction: &Extraction) -> SegmentRow {
    let seg = &extraction.segment;
    let t = trial.times();
    SegmentRow {
        id: trial.id().to_string(),
        onset: seg.onset_index(),
        peak: seg.peak_index(),
        offset: seg.offset_index(),
        t_onset: t[seg.onset_index()],
        t_offset: t[seg.offset_index()],
        duration: seg.task().duration(),
        x_start: seg.task().x_start(),
        x_end: seg.task().x_end(),
        outlier: extraction.is_outlier(),
    }
}

/// For each model pair, the number of trials where the first scores lower.
fn pairwise_wins(
    results: &[ModelFitResult],
    models: &[ModelSpec],
) -> Vec<(ModelSpec, ModelSpec, usize)> {
    let mut by_trial: BTreeMap<&str, BTreeMap<ModelSpec, f64>> = BTreeMap::new();
    for r in results {
        by_trial
            .entry(&r.trial_id)
            .or_default()
            .insert(r.model, r.mse);
    }
    let mut out = Vec::new();
    for (i, &a) in models.iter().enumerate() {
        for &b in &models[i + 1..] {
            let wins = by_trial.values().filter(|s| s[&a] < s[&b]).count();
            out.push((a, b, wins));
        }
    }
    out
}

fn bar_chart(groups: &[sparse_effort::eval::GroupMean], models: &[ModelSpec]) -> String {
    let mut keys: Vec<String> = groups
        .iter()
        .map(|g| format!("{} / {}", g.subject, g.movement_type))
        .collect();
    keys.dedup();
    let names: Vec<String> = models.iter().map(ToString::to_string).collect();
    let values: Vec<Vec<f64>> = keys
        .iter()
        .map(|k| {
            names
                .iter()
                .map(|m| {
                    groups
                        .iter()
                        .find(|g| {
                            &format!("{} / {}", g.subject, g.movement_type) == k && &g.model == m
                        })
                        .map_or(0.0, |g| g.mean_mse)
                })
                .collect()
        })
        .collect();
    svg::grouped_bars("mean velocity MSE (m/s)^2", &keys, &names, &values)
}

fn compare(cli: &Cli, scores: &Path, models: &[ModelSpec]) -> CmdResult {
    let rows: Vec<ScoreRow> = io::read_records(scores)?;
    let mut by_model: BTreeMap<ModelSpec, Vec<f64>> = BTreeMap::new();
    for row in &rows {
        by_model
            .entry(row.model.parse()?)
            .or_default()
            .push(row.mse);
    }
    let models: Vec<ModelSpec> = if models.is_empty() {
        by_model.keys().copied().collect()
    } else {
        models.to_vec()
    };
    let mut out = Vec::new();
    for (i, a) in models.iter().enumerate() {
        for b in &models[i + 1..] {
            let (Some(xa), Some(xb)) = (by_model.get(a), by_model.get(b)) else {
                return Err(
                    Error::Validation(format!("scores file has no rows for {a} or {b}")).into(),
                );
            };
            let test = wilcoxon_rank_sum(xa, xb)?;
            println!("{a} vs {b}: U={} p={}", test.u, io::format_float(test.p));
            out.push(Comparison {
                model_a: a.to_string(),
                model_b: b.to_string(),
                u: test.u,
                p: test.p,
            });
        }
    }
    write_table(&cli.out.join("comparison.csv"), &out, &COMPARISON_HEADER)?;
    Ok(())
}

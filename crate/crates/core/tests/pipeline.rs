use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sparse_effort::analytic::{sparse_min_effort_signal, sparse_trajectory};
use sparse_effort::eval::{aggregate, fit_and_score, ModelSpec, ScoreOptions};
use sparse_effort::movement::{synthesize_trial, task_from_segment, SynthesisOptions};
use sparse_effort::numeric::{discretize, solve_min_effort_linf};
use sparse_effort::{BallisticSegment, IntegratorChain, MovementTask};

/// With switch times on the grid, the discrete LP control equals the sampled
/// closed-form signal and the zero-order-hold states equal the exact
/// trajectory at every grid point.
#[test]
fn lp_reproduces_closed_form_on_aligned_grid() {
    let task = MovementTask::new(0.0, 1.0, 1.0).unwrap();
    for (n, steps) in [(2, 400), (3, 400)] {
        let chain = IntegratorChain::new(n).unwrap();
        let report = solve_min_effort_linf(&chain, &task, steps).unwrap();
        let signal = sparse_min_effort_signal(&task, n).unwrap();
        let h = 1.0 / steps as f64;
        for (k, u) in report.controls().iter().enumerate() {
            let expected = signal.value_at((k as f64 + 0.5) * h);
            assert!(
                (u - expected).abs() <= 1e-9 * signal.amplitude(),
                "n={n} k={k}"
            );
        }
        let system = discretize(&chain, 1.0, steps).unwrap();
        let states = system.simulate(&vec![0.0; n], report.controls()).unwrap();
        let exact = sparse_trajectory(&task, n).unwrap();
        for (k, s) in states.iter().enumerate() {
            let t = k as f64 * h;
            for (d, v) in s.iter().enumerate() {
                assert!(
                    (v - exact.derivative(t, d)).abs() < 1e-9,
                    "n={n} k={k} d={d}"
                );
            }
        }
    }
}

fn cohort(model: ModelSpec, noise_std: f64) -> Vec<sparse_effort::Trial> {
    let task = MovementTask::new(0.0, 0.1, 0.33).unwrap();
    let options = SynthesisOptions {
        model,
        noise_std,
        pre_pad: 0.1,
        post_pad: 0.1,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    (0..20)
        .map(|i| {
            synthesize_trial(
                format!("t{i}"),
                &task,
                &options,
                format!("s{}", i % 2),
                "reach",
                &mut rng,
            )
            .unwrap()
        })
        .collect()
}

/// On the generating window the generator's own model scores best, for
/// both generators, even with 1 mm position noise.
#[test]
fn generating_model_wins_on_true_window() {
    for (generator, rival) in [
        (ModelSpec::Sparse(3), ModelSpec::Quintic),
        (ModelSpec::Quintic, ModelSpec::Sparse(3)),
    ] {
        let mut results = Vec::new();
        for trial in cohort(generator, 1e-3) {
            let task = task_from_segment(&trial, 100, 430).unwrap();
            let task = MovementTask::new(task.x_start(), task.x_end(), 0.33).unwrap();
            let segment = BallisticSegment::new(100, 265, 430, task).unwrap();
            for model in [generator, rival] {
                results.push(
                    fit_and_score(&segment, &trial, model, &ScoreOptions::default()).unwrap(),
                );
            }
        }
        let table = aggregate(&results).unwrap();
        assert_eq!(table.len(), 4);
        for subject in ["s0", "s1"] {
            let mean = |m: ModelSpec| {
                table
                    .iter()
                    .find(|g| g.subject == subject && g.model == m.to_string())
                    .unwrap()
                    .mean_mse
            };
            assert!(mean(generator) < mean(rival), "{generator} on {subject}");
        }
    }
}

#[test]
fn noise_free_cohort_is_reproducible() {
    let a = cohort(ModelSpec::Sparse(4), 0.0);
    let b = cohort(ModelSpec::Sparse(4), 0.0);
    assert_eq!(a, b);
    assert!(a.windows(2).all(|w| w[0].positions() == w[1].positions()));
}

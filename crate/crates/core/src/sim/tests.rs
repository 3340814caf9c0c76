use std::collections::VecDeque;

use super::*;

fn cycle() -> FollowerGraph {
    // A observes B, B observes C, C observes A.
    FollowerGraph::new(vec!["A".into(), "B".into(), "C".into()], vec![(0, 1), (1, 2), (2, 0)]).unwrap()
}

fn config(model: ModelParams, seeds: SeedSpec, max_steps: u32, seed: u64) -> SimConfig {
    SimConfig {
        graph: GraphSource::Generated {
            graph: GraphKind::ErdosRenyi { n: 200, mean_out_degree: 4.0 },
            seed: Some(1),
        },
        seeds,
        model,
        max_steps,
        seed,
    }
}

fn threshold(theta: ThresholdDist) -> ModelParams {
    ModelParams::Threshold(ThresholdParams { theta })
}

fn learning(theta: ThresholdDist, lag: u32) -> ModelParams {
    ModelParams::Learning(LearningParams { theta, lag })
}

fn cascade(p: f64) -> ModelParams {
    ModelParams::Cascade(CascadeParams { p })
}

fn explicit(users: &[&str]) -> SeedSpec {
    SeedSpec::Explicit {
        users: users.iter().map(|s| s.to_string()).collect(),
    }
}

fn steps(run: &SimRun) -> Vec<(u32, u32)> {
    run.adoptions.iter().map(|a| (a.user, a.step)).collect()
}

const HALF: ThresholdDist = ThresholdDist::Constant { value: 0.5 };

#[test]
fn cycle_threshold_model() {
    let cfg = config(threshold(HALF), explicit(&["A"]), 10, 0);
    let run = run_threshold_model(&cycle(), &cfg).unwrap();
    assert_eq!(steps(&run), vec![(0, 0), (2, 1), (1, 2)]);
    assert_eq!(run.saturation, 1.0);
    assert_eq!(run.new_per_step, vec![1, 1, 1]);
    assert!(run.converged);
}

#[test]
fn cycle_with_lag_one() {
    let cfg = config(learning(HALF, 1), explicit(&["A"]), 10, 0);
    let run = run_social_learning(&cycle(), &cfg).unwrap();
    // Each hop waits one extra step: C at 1 + 1, then B at (2 + 1) + 1.
    assert_eq!(steps(&run), vec![(0, 0), (2, 2), (1, 4)]);
    assert_eq!(run.new_per_step, vec![1, 0, 1, 0, 1]);
    assert_eq!(run.saturation, 1.0);
}

#[test]
fn zero_thresholds_adopt_at_step_one() {
    let g = FollowerGraph::with_generated_labels(5, vec![(0, 1), (2, 3), (3, 2)]).unwrap();
    let cfg = config(threshold(ThresholdDist::Constant { value: 0.0 }), explicit(&["u4"]), 10, 0);
    let run = run_threshold_model(&g, &cfg).unwrap();
    // u1 has no alters and is not a seed.
    assert_eq!(steps(&run), vec![(4, 0), (0, 1), (2, 1), (3, 1)]);
}

#[test]
fn unreachable_thresholds_keep_seeds_only() {
    let g = gen_graph(&GraphKind::ErdosRenyi { n: 200, mean_out_degree: 6.0 }, 3).unwrap();
    for model in [
        threshold(ThresholdDist::Constant { value: 1.5 }),
        learning(ThresholdDist::Constant { value: 1.01 }, 0),
    ] {
        let run = run_model(&g, &config(model, SeedSpec::Random { count: 10 }, 50, 8)).unwrap();
        assert_eq!(run.adopters(), 10);
        assert_eq!(run.adoptions.iter().map(|a| a.user).collect::<Vec<_>>(), run.seeds);
    }
}

#[test]
fn lag_longer_than_horizon_keeps_seeds_only() {
    let g = gen_graph(&GraphKind::ErdosRenyi { n: 200, mean_out_degree: 6.0 }, 3).unwrap();
    let cfg = config(learning(ThresholdDist::Constant { value: 0.0 }, 6), SeedSpec::Random { count: 3 }, 5, 2);
    let run = run_social_learning(&g, &cfg).unwrap();
    assert_eq!(run.adopters(), 3);
    assert!(!run.converged);
}

#[test]
fn cascade_extremes() {
    let g = gen_graph(&GraphKind::ErdosRenyi { n: 300, mean_out_degree: 1.5 }, 5).unwrap();
    let none = run_independent_cascade(&g, &config(cascade(0.0), SeedSpec::Random { count: 4 }, 100, 1)).unwrap();
    assert_eq!(none.adopters(), 4);

    let all = run_independent_cascade(&g, &config(cascade(1.0), SeedSpec::Random { count: 4 }, 1000, 1)).unwrap();
    // Oracle: breadth-first search backwards along observation edges.
    let mut dist = vec![None; g.node_count()];
    let mut queue = VecDeque::new();
    for &s in &all.seeds {
        dist[s as usize] = Some(0u32);
        queue.push_back(s);
    }
    while let Some(v) = queue.pop_front() {
        for &w in g.observers(v) {
            if dist[w as usize].is_none() {
                dist[w as usize] = Some(dist[v as usize].unwrap() + 1);
                queue.push_back(w);
            }
        }
    }
    assert_eq!(all.adoption_steps(), dist);
    assert!(all.converged);
}

#[test]
fn runs_are_deterministic() {
    let g = gen_graph(&GraphKind::PreferentialAttachment { n: 400, m: 2 }, 7).unwrap();
    for model in [
        threshold(ThresholdDist::TruncatedNormal { mean: 0.3, sd: 0.2 }),
        cascade(0.4),
        learning(ThresholdDist::Uniform { low: 0.0, high: 0.6 }, 2),
    ] {
        let cfg = config(model, SeedSpec::Random { count: 5 }, 40, 99);
        let a = run_model(&g, &cfg).unwrap();
        let b = run_model(&g, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}

#[test]
fn extra_steps_after_convergence_change_nothing() {
    let g = gen_graph(&GraphKind::ErdosRenyi { n: 300, mean_out_degree: 5.0 }, 2).unwrap();
    let theta = ThresholdDist::Uniform { low: 0.0, high: 0.5 };
    let base = run_threshold_model(&g, &config(threshold(theta), SeedSpec::Random { count: 6 }, 1000, 4)).unwrap();
    assert!(base.converged);
    let last = base.adoptions.last().unwrap().step;
    let tight = run_threshold_model(&g, &config(threshold(theta), SeedSpec::Random { count: 6 }, last + 1, 4)).unwrap();
    assert_eq!(tight, base);
    let cut = run_threshold_model(&g, &config(threshold(theta), SeedSpec::Random { count: 6 }, last, 4)).unwrap();
    assert_eq!(cut.adoptions, base.adoptions);
    assert!(!cut.converged);
}

#[test]
fn thresholds_follow_the_spec() {
    let g = gen_graph(&GraphKind::ErdosRenyi { n: 2000, mean_out_degree: 2.0 }, 1).unwrap();
    let theta = ThresholdDist::TruncatedNormal { mean: 0.9, sd: 0.5 };
    let run = run_threshold_model(&g, &config(threshold(theta), SeedSpec::Random { count: 1 }, 1, 3)).unwrap();
    let t = run.thresholds.unwrap();
    assert!(t.iter().all(|v| (0.0..=1.0).contains(v)));
    let mean = t.iter().sum::<f64>() / t.len() as f64;
    assert!(mean > 0.5 && mean < 0.8, "{mean}");
}

#[test]
fn configuration_errors() {
    let g = cycle();
    let bad = [
        config(threshold(HALF), explicit(&[]), 5, 0),
        config(threshold(HALF), SeedSpec::Random { count: 0 }, 5, 0),
        config(threshold(HALF), SeedSpec::Random { count: 4 }, 5, 0),
        config(threshold(HALF), explicit(&["A"]), 0, 0),
        config(threshold(ThresholdDist::Uniform { low: 0.6, high: 0.2 }), explicit(&["A"]), 5, 0),
        config(threshold(ThresholdDist::Constant { value: -0.1 }), explicit(&["A"]), 5, 0),
        config(cascade(1.2), explicit(&["A"]), 5, 0),
    ];
    for cfg in bad {
        assert!(matches!(run_model(&g, &cfg), Err(Error::InvalidParameter(_))), "{cfg:?}");
    }
    let unknown = config(threshold(HALF), explicit(&["Z"]), 5, 0);
    assert!(matches!(run_model(&g, &unknown), Err(Error::UnknownUser(_))));
    let mismatched = config(cascade(0.5), explicit(&["A"]), 5, 0);
    assert!(run_threshold_model(&g, &mismatched).is_err());
}

#[test]
fn config_json_shape() {
    let cfg = config(learning(HALF, 2), SeedSpec::Random { count: 3 }, 20, 5);
    let json = serde_json::to_value(&cfg).unwrap();
    assert_eq!(json["model"]["kind"], "learning");
    assert_eq!(json["model"]["lag"], 2);
    assert_eq!(json["model"]["theta"]["kind"], "constant");
    assert_eq!(json["seeds"]["kind"], "random");
    assert_eq!(json["graph"]["source"], "generated");
    assert_eq!(json["graph"]["graph"]["kind"], "erdos_renyi");
    let back: SimConfig = serde_json::from_value(json).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn batch_seeds_are_derived_per_run() {
    let g = gen_graph(&GraphKind::ErdosRenyi { n: 100, mean_out_degree: 3.0 }, 0).unwrap();
    let cfg = config(cascade(0.3), SeedSpec::Random { count: 2 }, 20, 17);
    let batch = run_batch(&g, &cfg, 4).unwrap();
    for (i, run) in batch.iter().enumerate() {
        let single = run_model(&g, &SimConfig { seed: derive_seed(17, i as u64), ..cfg.clone() }).unwrap();
        assert_eq!(run, &single);
    }
}

#[test]
fn recovery_on_small_runs() {
    let g = gen_graph(&GraphKind::ErdosRenyi { n: 150, mean_out_degree: 5.0 }, 6).unwrap();
    let cfg = config(
        threshold(ThresholdDist::Uniform { low: 0.0, high: 1.0 }),
        SeedSpec::Random { count: 10 },
        100,
        21,
    );
    let runs = run_batch(&g, &cfg, 5).unwrap();
    let report = recover_batch(&g, &runs).unwrap();
    let non_seed: usize = runs.iter().map(|r| r.adopters() - r.seeds.len()).sum();
    assert_eq!(report.compared, non_seed);
    assert_eq!(report.violations, 0);
    assert!(report.min_margin.is_none_or(|m| m >= 0.0));
    for m in &report.margins {
        assert_eq!(runs[m.run].adoption_steps()[m.user as usize], Some(m.step));
    }

    let single = recover_thresholds(&g, &runs[0]).unwrap();
    assert_eq!(single.compared, runs[0].adopters() - runs[0].seeds.len());
}

#[test]
fn recovery_rejects_cascades() {
    let g = cycle();
    let run = run_independent_cascade(&g, &config(cascade(0.5), explicit(&["A"]), 5, 0)).unwrap();
    assert!(matches!(recover_thresholds(&g, &run), Err(Error::UnsupportedModel(_))));
}

#[test]
fn run_tags_sort_in_run_order() {
    assert_eq!(run_tag_label(3, 250), "t003");
    assert_eq!(run_tag_label(0, 1), "t0");
}

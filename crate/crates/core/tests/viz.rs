use recourse::datasets::builtin_domain;
use recourse::solver::{g_rsvi, SolverConfig};
use recourse::viz::{enumerate_traces, render_svg, TraceFigure, TracePanel};

fn panel(beta: f64, top_k: usize) -> TracePanel {
    let d = builtin_domain("synthetic_health").unwrap();
    let mdp = d.config.build_mdp().unwrap();
    let policy = g_rsvi(&mdp, &SolverConfig::new(beta, 8)).unwrap();
    enumerate_traces(&mdp, &policy, d.initial, top_k, format!("beta = {beta}")).unwrap()
}

#[test]
fn neutral_traces_halve_in_probability() {
    let p = panel(0.0, 3);
    let probs: Vec<f64> = p.traces.iter().map(|t| t.probability).collect();
    assert_eq!(probs, [0.5, 0.25, 0.125]);
    assert_eq!(
        p.traces[1].segments(),
        [("quit-drinking ×2".to_string(), 2.0)]
    );
    assert!(p.traces.iter().all(|t| t.reached_goal));
    assert!((p.other_probability - 0.125).abs() < 1e-12);
}

#[test]
fn deterministic_policy_has_one_certain_trace() {
    let p = panel(1.0, 5);
    assert_eq!(p.traces.len(), 1);
    let t = &p.traces[0];
    assert_eq!(
        (t.probability, t.total_cost, t.reached_goal),
        (1.0, 3.0, true)
    );
    assert_eq!(
        t.segments(),
        [
            ("healthy-diet".to_string(), 1.0),
            ("exercise ×2".to_string(), 2.0)
        ]
    );
    assert_eq!(p.other_probability, 0.0);
}

#[test]
fn shown_and_other_probability_sum_to_one() {
    for beta in [0.0, 0.5, 1.0] {
        for k in [1, 2, 4, 50] {
            let p = panel(beta, k);
            let shown: f64 = p.traces.iter().map(|t| t.probability).sum();
            assert!(
                (shown + p.other_probability - 1.0).abs() < 1e-9,
                "beta {beta} k {k}"
            );
            assert!(p
                .traces
                .windows(2)
                .all(|w| w[0].probability >= w[1].probability));
        }
    }
}

#[test]
fn exhausting_the_horizon_counts_as_a_failed_trace() {
    let p = panel(0.0, 50);
    // eight failed coin flips in a row
    let failed: Vec<_> = p.traces.iter().filter(|t| !t.reached_goal).collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0].probability, 0.5f64.powi(8));
    assert_eq!(failed[0].total_cost, 8.0);
}

#[test]
fn zero_traces_is_an_error() {
    let d = builtin_domain("synthetic_health").unwrap();
    let mdp = d.config.build_mdp().unwrap();
    let policy = g_rsvi(&mdp, &SolverConfig::new(0.0, 8)).unwrap();
    assert!(enumerate_traces(&mdp, &policy, d.initial, 0, "x").is_err());
}

#[test]
fn svg_is_deterministic_and_labelled() {
    let figure = TraceFigure {
        panels: vec![panel(0.0, 3), panel(1.0, 3)],
    };
    let a = render_svg(&figure);
    assert_eq!(a, render_svg(&figure));
    assert!(a.starts_with("<svg"));
    for needle in [
        "beta = 0",
        "beta = 1",
        "quit-drinking",
        "healthy-diet",
        "other outcomes",
    ] {
        assert!(a.contains(needle), "missing {needle}");
    }
}

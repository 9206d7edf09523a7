//! Most probable outcome traces of the toy insurance policies, drawn as SVG.
//!
//! ```text
//! cargo run --example policy_traces -- traces.svg
//! ```

use recourse::datasets::builtin_domain;
use recourse::solver::{g_rsvi, SolverConfig};
use recourse::viz::{enumerate_traces, render_svg, TraceFigure};

fn main() -> recourse::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "policy_traces.svg".into());
    let domain = builtin_domain("synthetic_health")?;
    let mdp = domain.config.build_mdp()?;

    let mut panels = Vec::new();
    for beta in [0.0, 0.5, 1.0] {
        let policy = g_rsvi(&mdp, &SolverConfig::new(beta, mdp.horizon()))?;
        let panel = enumerate_traces(&mdp, &policy, domain.initial, 4, format!("beta = {beta}"))?;
        println!("{}:", panel.title);
        for t in &panel.traces {
            let path: Vec<String> = t.segments().into_iter().map(|(label, _)| label).collect();
            println!(
                "  p={:.4} cost {:>2} {} {}",
                t.probability,
                t.total_cost,
                if t.reached_goal { "goal" } else { "fail" },
                path.join(" > ")
            );
        }
        println!("  other outcomes p={:.4}", panel.other_probability);
        panels.push(panel);
    }
    std::fs::write(&out, render_svg(&TraceFigure { panels }))?;
    println!("wrote {out}");
    Ok(())
}

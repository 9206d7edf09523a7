//! Episodic solver on the toy insurance domain.
//!
//! Prints the learning curve (mean and spread of episode cost over windows
//! of 1000 episodes) at each risk level, next to the exact expected cost of
//! the greedy full-sweep policy. Pass an output path to also save the
//! per-episode costs as CSV.
//!
//! ```text
//! cargo run --release --example episodic_solver -- episodes.csv
//! ```

use std::io::Write;

use recourse::datasets::builtin_domain;
use recourse::solver::{g_rsevi, g_rsvi, policy_cost_distribution, EpisodicConfig, SolverConfig};

fn main() -> recourse::Result<()> {
    let domain = builtin_domain("synthetic_health")?;
    let mdp = domain.config.build_mdp()?;
    let s0 = domain.initial;
    let h = mdp.horizon();
    let mut csv = std::env::args()
        .nth(1)
        .map(|p| std::fs::File::create(p).map(std::io::BufWriter::new))
        .transpose()?;
    if let Some(w) = csv.as_mut() {
        writeln!(w, "beta,episode,cost")?;
    }

    for beta in [0.0, 0.5, 1.0] {
        let solver = SolverConfig::new(beta, h);
        let run = g_rsevi(&mdp, &solver, &EpisodicConfig::new(s0))?;
        let sweep = g_rsvi(&mdp, &solver)?;
        let exact = policy_cost_distribution(&mdp, s0, h, |step, s| sweep.action(step, s))?;
        println!(
            "beta={beta}: full sweep expects cost {:.3}; {} states visited",
            exact.mean(),
            run.visited
        );
        for (i, window) in run.episode_costs.chunks(1000).enumerate() {
            let n = window.len() as f64;
            let mean = window.iter().sum::<f64>() / n;
            let sd = (window.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n).sqrt();
            println!(
                "  episodes {:>5}-{:<5} mean {mean:.3} sd {sd:.3}",
                i * 1000 + 1,
                i * 1000 + window.len()
            );
        }
        let (mean, sd) = run.tail_stats(500);
        println!("  last 500: mean {mean:.3} sd {sd:.3}");
        if let Some(w) = csv.as_mut() {
            for (k, c) in run.episode_costs.iter().enumerate() {
                writeln!(w, "{beta},{},{c}", k + 1)?;
            }
        }
    }
    Ok(())
}

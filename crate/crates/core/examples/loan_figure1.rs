//! A small loan domain where the cheapest-looking move can backfire.
//!
//! Changing jobs succeeds 90% of the time but otherwise leaves the applicant
//! jobless. The example prints the exact cost distribution of the policy at
//! several risk levels, computed by propagating the outcome tree rather than
//! by sampling.
//!
//! ```text
//! cargo run --release --example loan_figure1
//! ```

use recourse::datasets::builtin_domain;
use recourse::solver::{g_rsvi, policy_cost_distribution, SolverConfig};

fn main() -> recourse::Result<()> {
    let domain = builtin_domain("loan_figure1")?;
    let mdp = domain.config.build_mdp()?;
    let s0 = domain.initial;
    let h = mdp.horizon();

    for beta in [0.0, 0.5, 1.0, 2.0] {
        let policy = g_rsvi(&mdp, &SolverConfig::new(beta, h))?;
        let first = mdp.action_name(policy.action(1, s0));
        let dist = policy_cost_distribution(&mdp, s0, h, |step, s| policy.action(step, s))?;
        println!(
            "beta={beta:<4} first move {first:<13} success {:.4}  mean cost {:.3}  sd {:.3}",
            dist.success,
            dist.mean(),
            dist.variance().sqrt()
        );
        let mut atoms = dist.atoms.clone();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (c, p) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += p,
                _ => merged.push((c, p)),
            }
        }
        for (c, p) in merged {
            println!(
                "    cost {c:>3}  p {p:.4}  {}",
                "#".repeat((p * 60.0).round() as usize)
            );
        }
    }
    Ok(())
}

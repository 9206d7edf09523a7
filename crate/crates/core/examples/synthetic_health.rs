//! The toy insurance domain at three risk levels.
//!
//! Solves with the greedy recursion, rolls each policy out 1000 times from
//! the configured start and prints the risk table.
//!
//! ```text
//! cargo run --release --example synthetic_health
//! ```

use recourse::datasets::builtin_domain;
use recourse::eval::{evaluate, EvalOptions};
use recourse::mdp::ActionId;
use recourse::solver::{g_rsvi, SolverConfig};

fn main() -> recourse::Result<()> {
    let domain = builtin_domain("synthetic_health")?;
    let mdp = domain.config.build_mdp()?;
    let s0 = domain.initial;
    let schema = mdp.schema();
    println!(
        "start: {}",
        schema.labels_of(&schema.decode(s0)?).join(", ")
    );
    println!(
        "{} states, {} goals, horizon {}\n",
        mdp.num_states(),
        mdp.goal_count(),
        mdp.horizon()
    );

    let options = EvalOptions {
        n_trials: 1000,
        alphas: vec![0.8, 0.95],
        seed: 0,
    };
    println!(
        "{:>5}  {:<40} {:>6} {:>7} {:>7} {:>6} {:>7}",
        "beta", "plan if every step succeeds", "rho", "mu", "sigma2", "VaR95", "CVaR95"
    );
    for beta in [0.0, 0.5, 1.0] {
        let policy = g_rsvi(&mdp, &SolverConfig::new(beta, mdp.horizon()))?;

        let mut plan = Vec::new();
        let mut s = s0;
        for h in 1..=mdp.horizon() {
            let a = policy.action(h, s);
            if a == ActionId::NOOP {
                break;
            }
            plan.push(mdp.action_name(a).to_string());
            s = mdp.transitions(s, a)?[0].successor;
        }

        let r = evaluate(&mdp, &policy, &[s0], &options)?.aggregate;
        let cvar = r.cvar_at(0.95).map_or("n/a".into(), |c| format!("{c:.3}"));
        println!(
            "{beta:>5}  {:<40} {:>6.3} {:>7.3} {:>7.3} {:>6} {:>7}",
            plan.join(" > "),
            r.rho_h,
            r.mu_cost,
            r.sigma2_cost,
            r.var_at(0.95).unwrap_or(f64::NAN),
            cvar
        );
    }
    Ok(())
}

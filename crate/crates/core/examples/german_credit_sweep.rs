//! Credit recourse across risk levels.
//!
//! Reads a German credit CSV (the first argument) or, without one, a seeded
//! stand-in with the same columns. Trains the tree ensemble, picks the
//! applicants it rejects and compares the greedy and lower-deviation
//! variants over a grid of risk levels.
//!
//! ```text
//! cargo run --release --example german_credit_sweep -- german_credit_data.csv
//! ```

use recourse::config::ExperimentConfig;
use recourse::datasets::surrogate::SurrogateKind;
use recourse::datasets::{training_rows, unfavorable_under, DatasetDescriptor};
use recourse::eval::{evaluate, EvalOptions};
use recourse::model::{train_tree_ensemble, TrainConfig};
use recourse::solver::{g_rsvi, SolverConfig};

fn main() -> recourse::Result<()> {
    let descriptor = DatasetDescriptor::builtin("german_credit")?;
    let (rows, report) = match std::env::args().nth(1) {
        Some(path) => descriptor.preprocess_path(path)?,
        None => {
            println!("no CSV given; using a generated stand-in");
            let bytes = SurrogateKind::GermanCredit.generate(1000, 0)?;
            descriptor.preprocess(bytes.as_slice())?
        }
    };
    println!("{} rows read, {} kept", report.rows_read, report.rows_kept);

    let labeled = training_rows(&descriptor.schema, &rows)?;
    let (model, train) =
        train_tree_ensemble(&descriptor.schema, &labeled, &TrainConfig::default())?;
    println!("holdout accuracy {:?}", train.holdout_accuracy);
    let config = ExperimentConfig::builtin("gcd")?.resolve(Some(model.into()))?;
    let rejected = unfavorable_under(&config.schema, &config.model, &rows)?;
    let starts: Vec<_> = rejected.iter().map(|i| i.index).collect();
    println!("{} rejected applicants\n", starts.len());

    let mdp = config.build_mdp()?;
    let options = EvalOptions {
        n_trials: 100,
        alphas: vec![0.8, 0.95],
        seed: 0,
    };
    println!(
        "{:<13} {:>5} {:>7} {:>7} {:>8} {:>9} {:>9}",
        "variant", "beta", "rho", "mu", "sigma2", "sparsity", "proximity"
    );
    for lower in [false, true] {
        for beta in [0.0, 0.25, 0.5, 1.0] {
            let mut solver = SolverConfig::new(beta, mdp.horizon());
            if lower {
                solver = solver.lower_partial();
            }
            let policy = g_rsvi(&mdp, &solver)?;
            let r = evaluate(&mdp, &policy, &starts, &options)?.aggregate;
            println!(
                "{:<13} {beta:>5} {:>7.4} {:>7.3} {:>8.4} {:>9.3} {:>9.3}",
                if lower { "lower-partial" } else { "full-sigma" },
                r.rho_h,
                r.mu_cost,
                r.sigma2_cost,
                r.sparsity.unwrap_or(f64::NAN),
                r.proximity.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}

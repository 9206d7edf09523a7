//! Do rejected women and men face the same recourse risk?
//!
//! Uses the adult income CSV (first argument) or a seeded stand-in, solves
//! the income domain once, evaluates every sampled rejected person and
//! compares the two groups measure by measure with a rank test.
//!
//! ```text
//! cargo run --release --example gender_disparity -- adult.csv 0.5
//! ```

use recourse::config::ExperimentConfig;
use recourse::datasets::surrogate::SurrogateKind;
use recourse::datasets::{sample_instances, training_rows, unfavorable_under, DatasetDescriptor};
use recourse::eval::{disparity, evaluate, EvalOptions};
use recourse::model::{train_tree_ensemble, TrainConfig};
use recourse::solver::{g_rsvi, SolverConfig};

fn main() -> recourse::Result<()> {
    let mut args = std::env::args().skip(1);
    let csv = args.next();
    let beta: f64 = args.next().and_then(|b| b.parse().ok()).unwrap_or(0.0);

    let descriptor = DatasetDescriptor::builtin("adult")?;
    let (rows, _) = match csv {
        Some(path) => descriptor.preprocess_path(path)?,
        None => {
            println!("no CSV given; using a generated stand-in");
            let bytes = SurrogateKind::Adult.generate(8000, 0)?;
            descriptor.preprocess(bytes.as_slice())?
        }
    };
    let labeled = training_rows(&descriptor.schema, &rows)?;
    let (model, _) = train_tree_ensemble(&descriptor.schema, &labeled, &TrainConfig::default())?;
    let config = ExperimentConfig::builtin("aid")?.resolve(Some(model.into()))?;
    let rejected = unfavorable_under(&config.schema, &config.model, &rows)?;
    let chosen = sample_instances(&rejected, 600, 0);

    let gender = config.schema.require_feature("Gender")?;
    let (female, male): (Vec<_>, Vec<_>) = chosen
        .iter()
        .map(|i| i.index)
        .partition(|&s| config.schema.level_of(s, gender) == 0);
    println!(
        "{} women and {} men sampled from {} rejected",
        female.len(),
        male.len(),
        rejected.len()
    );

    let mdp = config.build_mdp()?;
    let policy = g_rsvi(&mdp, &SolverConfig::new(beta, mdp.horizon()))?;
    let options = EvalOptions {
        n_trials: 100,
        alphas: vec![0.8, 0.95],
        seed: 0,
    };
    let report = disparity(
        &evaluate(&mdp, &policy, &female, &options)?,
        &evaluate(&mdp, &policy, &male, &options)?,
    )?;

    println!(
        "\nbeta = {beta}\n{:<10} {:>9} {:>9} {:>9} {:>10}",
        "measure", "female", "male", "delta", "p"
    );
    let show = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    for c in &report.comparisons {
        let p = c
            .test
            .as_ref()
            .map_or("n/a".to_string(), |t| format!("{:.3e}", t.p_value));
        println!(
            "{:<10} {:>9} {:>9} {:>9} {:>10}",
            c.measure,
            show(c.group_a),
            show(c.group_b),
            show(c.delta),
            p
        );
    }
    Ok(())
}

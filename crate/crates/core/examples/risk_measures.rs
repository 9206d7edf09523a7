//! Tail measures and the rank test on plain samples.
//!
//! ```text
//! cargo run --example risk_measures
//! ```

use recourse::eval::mwu::{mann_whitney_u_exact, mann_whitney_u_normal};
use recourse::eval::{cvar_alpha, mann_whitney_u, var_alpha};

fn main() -> recourse::Result<()> {
    let costs: Vec<f64> = (1..=10).map(f64::from).collect();
    for alpha in [0.5, 0.8, 0.9, 0.95] {
        let var = var_alpha(&costs, alpha)?;
        let cvar = cvar_alpha(&costs, alpha)?;
        println!(
            "1..=10  alpha {alpha:<4}  VaR {var:<4}  CVaR {}",
            cvar.map_or("none".into(), |c| c.to_string())
        );
    }
    // no sample lies above the VaR of a point mass, so there is no tail mean
    println!(
        "point mass  VaR {}  CVaR {:?}\n",
        var_alpha(&[4.0; 5], 0.9)?,
        cvar_alpha(&[4.0; 5], 0.9)?
    );

    let group_a = [3.0, 4.0, 4.0, 5.0, 7.0];
    let group_b = [5.0, 6.0, 6.0, 8.0, 9.0, 9.0];
    let auto = mann_whitney_u(&group_a, &group_b)?;
    let exact = mann_whitney_u_exact(&group_a, &group_b)?;
    let normal = mann_whitney_u_normal(&group_a, &group_b)?;
    println!(
        "U = {}  chosen route {:?}  p = {:.5}",
        auto.u, auto.method, auto.p_value
    );
    println!(
        "exact p = {:.5}, normal approximation p = {:.5}",
        exact.p_value, normal.p_value
    );
    Ok(())
}

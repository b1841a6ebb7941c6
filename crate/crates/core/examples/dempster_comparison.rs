//! Poisson x = 5: the Dempster-Shafer plausibility of a singleton versus the IM plausibility.

use imodels::association::poisson_mean_assoc;
use imodels::belief::{dempster_r, plausibility_point};
use imodels::prs::default_prs;

fn main() -> imodels::Result<()> {
    let assoc = poisson_mean_assoc();
    let prs = default_prs();
    println!("{:>6}  {:>10}  {:>10}", "theta", "dempster", "im");
    for k in 1..=20 {
        let theta = k as f64 * 0.6;
        println!(
            "{theta:>6.2}  {:>10.6}  {:>10.6}",
            dempster_r(5, theta)?,
            plausibility_point(&assoc, &prs, 5.0, theta)?
        );
    }
    println!(
        "\nat theta = 5: dempster {:.4}, im {}",
        dempster_r(5, 5.0)?,
        plausibility_point(&assoc, &prs, 5.0, 5.0)?
    );
    Ok(())
}

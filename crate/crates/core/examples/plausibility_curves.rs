//! Plausibility curves and 90% plausibility intervals for a Gaussian and a Poisson observation.

use imodels::association::{gaussian_mean_assoc, poisson_mean_assoc};
use imodels::belief::{plausibility_point, plausibility_region, GridSpec};
use imodels::prs::default_prs;

fn main() -> imodels::Result<()> {
    let prs = default_prs();
    let x = 5.0;
    for (name, assoc) in [("gaussian", gaussian_mean_assoc()), ("poisson", poisson_mean_assoc())] {
        println!("{name}, x = {x}");
        println!("{:>6}  {:>10}", "theta", "pl");
        for k in 0..=12 {
            let theta = 1.0 + k as f64 * 0.75;
            println!("{theta:>6.2}  {:>10.6}", plausibility_point(&assoc, &prs, x, theta)?);
        }
        let region = plausibility_region(&assoc, &prs, x, 0.1, &GridSpec::default())?;
        for (lo, hi) in &region.intervals {
            println!("90% plausibility interval: ({lo:.4}, {hi:.4})\n");
        }
    }
    Ok(())
}

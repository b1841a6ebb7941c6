//! Frequency calibration of IM plausibility for point assertions across models and random sets.

use imodels::association::{Association, ScalarModel};
use imodels::numeric::RandomStream;
use imodels::prs::{default_prs, one_sided_prs, Side};
use imodels::validity::{check_point_validity, DEFAULT_ALPHAS};

fn main() -> imodels::Result<()> {
    let stream = RandomStream::new(3, 0);
    println!("largest P{{pl_X(theta) <= alpha}} over the theta grid, alpha = {DEFAULT_ALPHAS:?}");
    let mut k = 0;
    for model in ScalarModel::ALL {
        let assoc = Association::new(model);
        let grid: Vec<f64> = match model {
            ScalarModel::Gaussian => vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            _ => vec![1.0, 2.0, 3.0, 4.0, 5.0],
        };
        for prs in [default_prs(), one_sided_prs(Side::Lower), one_sided_prs(Side::Upper)] {
            let r = check_point_validity(&assoc, &prs, &grid, &DEFAULT_ALPHAS, 5_000, &stream.substream(k))?;
            k += 1;
            let rates: Vec<String> = r.empirical.iter().map(|e| format!("{e:.3}")).collect();
            println!(
                "{:<12} {:<8} valid={:<5} {}",
                model.name(),
                prs.family().name(),
                r.all_pass(),
                rates.join(" ")
            );
        }
    }
    Ok(())
}

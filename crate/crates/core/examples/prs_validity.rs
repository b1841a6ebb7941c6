//! Calibration of the built-in predictive random sets: Q_S(U) should be uniform.

use imodels::numeric::RandomStream;
use imodels::prs::{default_prs, one_sided_prs, singleton_prs, Side};
use imodels::validity::{check_prs_validity, DEFAULT_ALPHAS};

fn main() -> imodels::Result<()> {
    let stream = RandomStream::new(2024, 0);
    for prs in [
        default_prs(),
        one_sided_prs(Side::Lower),
        one_sided_prs(Side::Upper),
        singleton_prs(),
    ] {
        let r = check_prs_validity(&prs, 100_000, &DEFAULT_ALPHAS, &stream)?;
        println!(
            "{:<10} valid={:<5} ks={:.5} (critical {:.5})",
            prs.family().name(),
            r.all_pass(),
            r.ks_distance.unwrap_or(f64::NAN),
            r.ks_critical.unwrap_or(f64::NAN)
        );
        for (a, e) in r.alpha_grid.iter().zip(&r.empirical) {
            println!("    P{{Q >= 1 - {a}}} = {e:.4}");
        }
    }
    Ok(())
}

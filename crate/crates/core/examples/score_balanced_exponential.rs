//! Two-sided inference for an exponential mean with score-balanced sets.

use imodels::association::exponential_mean_assoc;
use imodels::association::ScalarModel;
use imodels::belief::{auto_bracket, plausibility_region, region_from_curve, GridSpec};
use imodels::prs::default_prs;
use imodels::score_balance::{
    build_balanced_family, check_unimodal_condition, two_sided_belief_at, ExponentialScore, DEFAULT_TOL,
};

fn main() -> imodels::Result<()> {
    let model = ExponentialScore;
    let family = build_balanced_family(&model, 1.0, DEFAULT_TOL)?;
    let worst = |v: Vec<f64>| v.into_iter().fold(0.0f64, |m, r| m.max(r.abs()));
    println!("family at theta0 = 1: {} points", family.abs_t.len());
    println!(
        "  max balance residual     {:.2e}",
        worst(family.balance_residuals(&model)?)
    );
    println!(
        "  max reflexivity residual {:.2e}",
        worst(family.reflexivity_residuals(&model)?)
    );
    let grid: Vec<f64> = (0..=400).map(|i| -0.99 + 0.01 * i as f64).collect();
    let report = check_unimodal_condition(&model, 1.0, &grid);
    println!(
        "  unimodal condition holds: {} (argmin {:?}, V(0) = {})",
        report.holds, report.argmin_t, report.v_at_zero
    );

    let x = 5.0;
    let (lo, hi, log_scale) = auto_bracket(ScalarModel::Exponential, x);
    let balanced = region_from_curve(
        |theta| Ok(1.0 - two_sided_belief_at(&model, theta, x, DEFAULT_TOL)?),
        0.1,
        (lo, hi),
        512,
        log_scale,
        1e-6,
    )?;
    let default = plausibility_region(&exponential_mean_assoc(), &default_prs(), x, 0.1, &GridSpec::default())?;
    println!("\nx = {x}, 90% regions");
    println!(
        "  score-balanced {:?}  length {:.3}",
        balanced.intervals,
        balanced.total_length()
    );
    println!(
        "  default        {:?}  length {:.3}",
        default.intervals,
        default.total_length()
    );
    Ok(())
}

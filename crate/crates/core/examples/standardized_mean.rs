//! Plausibility for the standardized mean mu / sigma of a normal sample.

use imodels::applications::{psi_interval, psi_plausibility, psi_plausibility_mc, NormalSample};
use imodels::numeric::RandomStream;
use imodels::validity::check_psi_coverage;

fn main() -> imodels::Result<()> {
    let data = [1.9, 0.4, 3.1, -0.6, 2.7, 1.2, 0.8, 4.0, -1.1, 2.2];
    let sample = NormalSample::from_data(&data)?;
    println!("n = {}, xbar = {:.4}, s = {:.4}", sample.n, sample.xbar, sample.s);
    let (lo, hi) = psi_interval(&sample, 0.1)?;
    println!("90% plausibility interval for psi: ({lo:.4}, {hi:.4})");
    let stream = RandomStream::new(7, 0);
    for psi in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let mc = psi_plausibility_mc(&sample, psi, 200_000, &stream)?;
        println!(
            "  pl({psi:.2}) = {:.5}   simulation {:.5} +- {:.5}",
            psi_plausibility(&sample, psi)?,
            mc.plausibility,
            mc.mc_se_plausibility
        );
    }
    let cov = check_psi_coverage(10, 1.0, 2.0, 0.1, 10_000, &stream.substream(1))?;
    println!(
        "miss rate at (n, mu, sigma) = (10, 1, 2): {:.4} +- {:.4}",
        cov.empirical[0], cov.mc_se[0]
    );
    Ok(())
}

//! Testing equality of many exponential rates: IM versus likelihood-ratio power.

use imodels::applications::{power_study, PowerConfig};
use imodels::numeric::RandomStream;

fn main() -> imodels::Result<()> {
    let config = PowerConfig {
        n_datasets: 500,
        n_mc: 50_000,
        n_null: 5_000,
        ..PowerConfig::default()
    };
    let rows = power_study(&[1.0, 1.5, 2.0, 3.0], &config, &RandomStream::new(11, 0))?;
    println!("{:>6}  {:<6}  {:>6}  {:>6}", "ratio", "method", "power", "se");
    for r in rows {
        println!(
            "{:>6}  {:<6}  {:>6.3}  {:>6.3}",
            r.theta_ratio,
            r.method.name(),
            r.power,
            r.mc_se
        );
    }
    Ok(())
}

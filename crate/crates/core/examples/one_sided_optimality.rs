//! Relative efficiency of default and one-sided sets for one-sided assertions.

use imodels::association::{gaussian_mean_assoc, poisson_mean_assoc, Assertion};
use imodels::belief::{matched_one_sided_prs, relative_efficiency};
use imodels::prs::default_prs;

fn main() -> imodels::Result<()> {
    let a = Assertion::LeftRay(3.0);
    let default = default_prs();
    println!("assertion theta < 3");
    println!("{:<9} {:>4}  {:>9}  {:>9}", "model", "x", "R(matched)", "R(default)");
    for (name, assoc) in [("gaussian", gaussian_mean_assoc()), ("poisson", poisson_mean_assoc())] {
        let matched = matched_one_sided_prs(&assoc, &a)?;
        for x in [0.0, 1.0, 2.0] {
            let r_star = relative_efficiency(&assoc, &matched, x, &a);
            let r_def = relative_efficiency(&assoc, &default, x, &a);
            match (r_star, r_def) {
                (Ok(s), Ok(d)) => println!("{name:<9} {x:>4}  {s:>9.6}  {d:>9.6}"),
                _ => println!("{name:<9} {x:>4}  fiducial belief is zero"),
            }
        }
    }
    Ok(())
}

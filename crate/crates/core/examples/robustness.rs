//! Empirical robustness constant over random control pairs, at two grid sizes.

use impulse_core::io::read_ordinary;
use impulse_core::propagate::{random_pairs, robustness_gap};

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

fn main() -> impulse_core::Result<()> {
    let spec = impulse_core::io::read_system(format!("{DATA}/s_lin.json").as_ref())?;
    let a = read_ordinary(format!("{DATA}/a_one.json").as_ref(), &spec)?;
    let pairs = random_pairs(&spec, 50, 6, 0.5, 7);
    for h in [2e-3, 1e-3] {
        let report = robustness_gap(&spec, &pairs, &a, h, 1e-9)?;
        println!("h = {h:.0e}: max ratio {:.6}", report.max_ratio);
    }
    Ok(())
}

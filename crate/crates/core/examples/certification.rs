//! Certify the optimum of the constant-field problem and a candidate that is not optimal.

use impulse_core::certify::{certify, CertifyOptions};
use impulse_core::io::load_signals;
use impulse_core::TransformContext;

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

fn main() -> impulse_core::Result<()> {
    let spec = impulse_core::io::read_system(format!("{DATA}/s_const.json").as_ref())?;
    let ctx = TransformContext::new(&spec);
    for a_file in ["a_minus_one", "a_one"] {
        let (u, a) = load_signals(
            &spec,
            format!("{DATA}/optimum_u.json").as_ref(),
            format!("{DATA}/{a_file}.json").as_ref(),
        )?;
        let report = certify(&ctx, &u, &a, &CertifyOptions::default())?;
        println!("u jumps to -2 at 0+, {a_file}: pass = {}", report.pass);
        for c in &report.conditions {
            println!("  {:<12} pass {:<5} margin {:+.3e}", c.condition, c.pass, c.margin);
        }
    }
    Ok(())
}

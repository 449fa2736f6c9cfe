//! Mollified controls converge to the impulsive trajectory at rate 1/k.

use impulse_core::io::load_signals;
use impulse_core::propagate::approximation_check;
use impulse_core::TransformContext;

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

fn main() -> impulse_core::Result<()> {
    for system in ["s_const", "s_lin"] {
        let spec = impulse_core::io::read_system(format!("{DATA}/{system}.json").as_ref())?;
        let ctx = TransformContext::new(&spec);
        let (u, a) = load_signals(
            &spec,
            format!("{DATA}/step.json").as_ref(),
            format!("{DATA}/a_one.json").as_ref(),
        )?;
        println!("{system}");
        for row in approximation_check(&ctx, &u, &a, &[10, 20, 40, 80], 1e-3)? {
            let ratio = row.ratio.map_or("-".to_string(), |r| format!("{r:.4}"));
            println!("  k = {:>3}  gap {:.6e}  ratio {ratio}", row.k, row.l1_gap);
        }
    }
    Ok(())
}

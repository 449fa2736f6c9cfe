//! For continuous controls the direct and the transformed integrators agree.

use impulse_core::io::load_signals;
use impulse_core::propagate::{integrate_impulsive, integrate_smooth};
use impulse_core::TransformContext;

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

fn main() -> impulse_core::Result<()> {
    let spec = impulse_core::io::read_system(format!("{DATA}/s_lin.json").as_ref())?;
    let ctx = TransformContext::new(&spec);
    let (u, a) = load_signals(
        &spec,
        format!("{DATA}/ramp.json").as_ref(),
        format!("{DATA}/a_one.json").as_ref(),
    )?;
    let direct = integrate_smooth(&ctx, &u, &a, 1e-3)?;
    let transformed = integrate_impulsive(&ctx, &u, &a, 1e-3)?;
    let gap = direct
        .nodes()
        .iter()
        .zip(transformed.nodes())
        .map(|(d, t)| (d.x()[0] - t.x()[0]).abs())
        .fold(0.0, f64::max);
    println!(
        "x(T) direct {:?}, transformed {:?}",
        direct.final_state(),
        transformed.final_state()
    );
    println!("sup-norm gap {gap:.3e}");
    Ok(())
}

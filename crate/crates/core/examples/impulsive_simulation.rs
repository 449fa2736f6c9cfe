//! Integrate a control with a jump and print both one-sided states at the jump.

use impulse_core::io::{load_signals, trajectory_table, Format};
use impulse_core::propagate::integrate_impulsive;
use impulse_core::TransformContext;

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

fn main() -> impulse_core::Result<()> {
    let spec = impulse_core::io::read_system(format!("{DATA}/s_lin.json").as_ref())?;
    let ctx = TransformContext::new(&spec);
    let (u, a) = load_signals(
        &spec,
        format!("{DATA}/step_ln2.json").as_ref(),
        format!("{DATA}/a_zero.json").as_ref(),
    )?;
    let traj = integrate_impulsive(&ctx, &u, &a, 0.05)?;
    for node in traj.nodes().iter().filter(|n| n.is_jump()) {
        println!("jump at t = {}: x {:?} -> {:?}", node.t, node.x_left, node.x_right);
    }
    println!("x(T) = {:?} (closed form 2 x0 = 2)", traj.final_state());
    let csv = trajectory_table(&traj).render(Format::Csv);
    println!("{}", csv.lines().take(4).collect::<Vec<_>>().join("\n"));
    Ok(())
}

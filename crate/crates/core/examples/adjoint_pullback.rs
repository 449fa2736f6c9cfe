//! Transformed adjoint, its pull-back to original coordinates, and the lifted-field audit.

use impulse_core::adjoint::{audit_lifted_commutativity, lifted_samples, pull_back_adjoint, solve_transformed_adjoint};
use impulse_core::io::load_signals;
use impulse_core::propagate::integrate_impulsive;
use impulse_core::TransformContext;

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

fn main() -> impulse_core::Result<()> {
    let spec = impulse_core::io::read_system(format!("{DATA}/s_lin.json").as_ref())?;
    let ctx = TransformContext::new(&spec);
    let (u, a) = load_signals(
        &spec,
        format!("{DATA}/step_ln2.json").as_ref(),
        format!("{DATA}/a_one.json").as_ref(),
    )?;
    let traj = integrate_impulsive(&ctx, &u, &a, 1e-3)?;
    let arc = solve_transformed_adjoint(&ctx, &traj)?;
    let p = pull_back_adjoint(&ctx, &arc, &traj)?;
    let last = p.nodes().last().unwrap();
    let end = traj.nodes().last().unwrap();
    println!("pi(0)  = {:?}", arc.nodes()[0].pi);
    println!("p(0+)  = {:?}", p.nodes()[0].p_right);
    println!("p(T)   = {:?}", last.p_left);
    println!("grad γ = {:?}", spec.grad_cost(end.x(), end.u())?);

    let comm2 = impulse_core::io::read_system(format!("{DATA}/s_comm2.json").as_ref())?;
    let lifted = audit_lifted_commutativity(&comm2, &lifted_samples(&comm2, 50, 1.0, 3), 1e-8)?;
    println!(
        "lifted brackets on s_comm2: pass = {} max norm {:.3e}",
        lifted.pass, lifted.max_norm
    );
    Ok(())
}

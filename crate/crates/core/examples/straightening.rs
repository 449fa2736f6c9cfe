//! The straightening transform: round trip, Jacobian and the flow-box audit.

use impulse_core::TransformContext;

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

fn main() -> impulse_core::Result<()> {
    let spec = impulse_core::io::read_system(format!("{DATA}/s_comm2.json").as_ref())?;
    let ctx = TransformContext::new(&spec);
    let (x, z) = (vec![1.2, -0.7], vec![0.4, -1.1]);
    let (xi, eta) = ctx.phi(&x, &z)?;
    let (x_back, z_back) = ctx.phi_inverse(&xi, &eta)?;
    println!("phi(x, z)      = ({xi:?}, {eta:?})");
    println!("closed form xi = [{}, {}]", x[0] * (-z[0]).exp(), x[1] * (-z[1]).exp());
    println!("round trip     = ({x_back:?}, {z_back:?})");
    println!("dphi           = {}", ctx.dphi(&x, &z)?);

    let report = ctx.verify_flowbox(&spec.default_samples(100, 2.0), 1e-6);
    println!(
        "flow-box: pass = {} max residual {:.3e}",
        report.pass, report.max_residual
    );
    Ok(())
}

//! Lie-bracket audit of impulse fields: one commuting and one non-commuting system.

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

fn main() -> impulse_core::Result<()> {
    for name in ["s_comm2", "s_noncomm"] {
        let spec = impulse_core::io::read_system(format!("{DATA}/{name}.json").as_ref())?;
        let report = spec.check_commutativity(&spec.default_samples(200, 2.0), 1e-8);
        println!("{name}: pass = {}", report.pass);
        for pair in &report.pairs {
            println!("  [g{}, g{}] max norm {:.3e}", pair.alpha, pair.beta, pair.max_norm);
        }
        if name == "s_noncomm" {
            let br = spec.bracket(spec.impulse(0), spec.impulse(1));
            let names = spec.names();
            let comps: Vec<String> = br.components().iter().map(|c| c.display(names).to_string()).collect();
            println!("  symbolic [g1, g2] = ({})", comps.join(", "));
        }
    }
    Ok(())
}

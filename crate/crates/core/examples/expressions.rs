//! Parse, evaluate and differentiate expressions.

use impulse_core::expr::{parse, Names};

fn main() -> impulse_core::Result<()> {
    let names = Names::standard(2, 1, 1);
    let e = parse("x1 * exp(-u1) + a1 * x2^2", &names)?;
    let at = [1.5, -0.5, 0.3, 2.0];
    println!("e             = {}", e.display(&names));
    println!("e(at)         = {}", e.eval(&at)?);
    for v in ["x1", "x2", "u1"] {
        let d = e.diff(names.lookup(v).unwrap());
        println!("de/d{v:<8} = {}  ->  {}", d.display(&names), d.eval(&at)?);
    }
    if let Err(err) = parse("x1 + y7", &names) {
        println!("rejected      : {err}");
    }
    Ok(())
}

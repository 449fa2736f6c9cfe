//! Drive the command line in-process, as the `impulse` binary does.

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

fn main() {
    let system = format!("{DATA}/s_const.json");
    let control = format!("{DATA}/step.json");
    let ordinary = format!("{DATA}/a_one.json");
    let code = impulse_core::cli::run([
        "impulse",
        "simulate",
        "--system",
        &system,
        "--control",
        &control,
        "--ordinary",
        &ordinary,
        "--step",
        "0.25",
        "--format",
        "json",
    ]);
    println!("exit code {code}");
}

fn main() {
    std::process::exit(impulse_core::cli::run(std::env::args_os()));
}

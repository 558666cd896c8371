fn main() {
    std::process::exit(valgebra::cli::run_command(std::env::args().collect()));
}

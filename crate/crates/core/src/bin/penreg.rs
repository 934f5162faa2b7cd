fn main() {
    std::process::exit(penreg::harness::cli::run(std::env::args_os()));
}

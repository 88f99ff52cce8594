fn main() {
    std::process::exit(fracjac::cli::main_with_args(std::env::args_os()));
}

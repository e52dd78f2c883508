fn main() {
    std::process::exit(tollsim::cli::main_with_args(std::env::args_os()));
}

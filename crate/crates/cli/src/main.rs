fn main() {
    std::process::exit(flexsim_cli::run(std::env::args_os()));
}

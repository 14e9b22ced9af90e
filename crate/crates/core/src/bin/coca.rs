fn main() {
    std::process::exit(coca::cli::main_with_args(std::env::args_os()));
}

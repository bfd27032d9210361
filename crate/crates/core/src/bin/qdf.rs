fn main() {
    std::process::exit(qdf::cli::main_with_args(std::env::args_os()));
}

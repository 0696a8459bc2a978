fn main() {
    std::process::exit(heredlab::cli::main_with_args(std::env::args_os()));
}

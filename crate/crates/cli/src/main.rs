fn main() {
    std::process::exit(devine_cli::main_with_args(std::env::args_os()));
}

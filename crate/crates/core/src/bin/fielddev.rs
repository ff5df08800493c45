fn main() {
    std::process::exit(fielddev::cli::main_with_args(std::env::args_os()));
}

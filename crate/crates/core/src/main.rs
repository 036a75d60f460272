fn main() {
    std::process::exit(expander_lab::cli::main_with_args(std::env::args_os()));
}

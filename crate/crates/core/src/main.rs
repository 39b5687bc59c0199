fn main() {
    std::process::exit(airs_lab::cli::main_with_args(std::env::args_os()));
}

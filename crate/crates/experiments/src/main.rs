fn main() {
    std::process::exit(kshrink_experiments::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(pattern_dtn::cli::main_with_args(std::env::args_os()));
}

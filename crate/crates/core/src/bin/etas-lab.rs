fn main() {
    std::process::exit(etas_lab::cli::run_from_args(std::env::args_os()));
}

fn main() {
    std::process::exit(bundlescope::cli::main_with_args(std::env::args_os()));
}

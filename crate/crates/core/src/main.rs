fn main() {
    std::process::exit(surface_flows::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(grf_periodic::cli::run_command(std::env::args_os()));
}

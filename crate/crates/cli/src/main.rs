fn main() {
    std::process::exit(flock_cli::run_cli(std::env::args_os()));
}

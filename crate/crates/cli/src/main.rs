fn main() {
    std::process::exit(flatcount_cli::run_command(std::env::args_os()));
}

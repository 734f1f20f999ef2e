fn main() {
    std::process::exit(kscollapse::cli::run_cli(std::env::args_os()));
}

fn main() {
    std::process::exit(dupembed::cli::run_cli(std::env::args_os()));
}

fn main() {
    std::process::exit(hierseed_cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(mixfair::cli::run(std::env::args_os()));
}

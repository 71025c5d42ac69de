fn main() {
    std::process::exit(cpstest::cli::run(std::env::args_os()));
}

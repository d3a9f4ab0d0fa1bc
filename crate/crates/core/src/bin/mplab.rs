fn main() {
    std::process::exit(mplab::harness::cli::run(std::env::args_os()));
}

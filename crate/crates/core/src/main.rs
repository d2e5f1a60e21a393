fn main() {
    std::process::exit(framevqa::cli::run(std::env::args_os()));
}

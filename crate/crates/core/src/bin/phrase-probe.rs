fn main() {
    std::process::exit(phrase_probe::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(neighperc::cli::run(std::env::args_os()));
}

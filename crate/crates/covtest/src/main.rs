fn main() {
    std::process::exit(covtest::cli::run());
}

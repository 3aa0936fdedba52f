fn main() {
    std::process::exit(windfit::cli::run(std::env::args()));
}

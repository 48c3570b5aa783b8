fn main() {
    std::process::exit(spinbath::cli::run(std::env::args()));
}

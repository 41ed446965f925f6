fn main() {
    std::process::exit(anchor_risk::cli::run());
}

fn main() {
    std::process::exit(pedpen::cli::run());
}

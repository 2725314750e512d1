fn main() {
    std::process::exit(dybit::cli::run());
}

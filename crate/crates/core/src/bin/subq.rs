fn main() {
    std::process::exit(subq::cli::main_with_args(std::env::args()));
}

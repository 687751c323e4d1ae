fn main() {
    std::process::exit(tripdp::cli::main());
}

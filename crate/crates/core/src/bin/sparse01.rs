fn main() {
    std::process::exit(sparse01::cli::main());
}

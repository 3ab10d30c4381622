fn main() {
    std::process::exit(dynprobit::cli::main());
}

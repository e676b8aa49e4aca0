fn main() {
    std::process::exit(hsifc::cli::main());
}

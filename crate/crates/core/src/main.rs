fn main() {
    std::process::exit(sphembed::cli::main());
}

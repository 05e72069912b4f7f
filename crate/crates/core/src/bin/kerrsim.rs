fn main() {
    std::process::exit(kerrsim::cli::main_with(std::env::args_os()));
}

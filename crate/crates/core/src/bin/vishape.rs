fn main() {
    std::process::exit(vishape::cli::main_with_args(std::env::args_os()));
}

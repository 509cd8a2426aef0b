fn main() {
    std::process::exit(kdvqe::cli::main_with_args(std::env::args_os()));
}

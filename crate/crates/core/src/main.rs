fn main() {
    std::process::exit(dcmpc::cli::main_with_args(std::env::args_os()));
}

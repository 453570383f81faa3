fn main() {
    std::process::exit(uaboost::cli::main_with_args(std::env::args_os()));
}

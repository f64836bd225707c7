fn main() {
    std::process::exit(adlocal::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(streamal::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(demlab::cli::main_with_args(std::env::args_os()));
}

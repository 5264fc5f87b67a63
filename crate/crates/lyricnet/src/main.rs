fn main() {
    std::process::exit(lyricnet::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(lpred::cli::run(std::env::args_os()));
}

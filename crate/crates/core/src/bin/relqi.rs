fn main() {
    std::process::exit(relqi::cli::run(std::env::args_os()));
}

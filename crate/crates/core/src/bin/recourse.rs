fn main() {
    std::process::exit(recourse::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(boge::cli::run(std::env::args_os()));
}

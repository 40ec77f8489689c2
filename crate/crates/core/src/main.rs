fn main() {
    std::process::exit(sraar::cli::run(std::env::args_os()));
}

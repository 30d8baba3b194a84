fn main() {
    std::process::exit(hloc::cli::run(std::env::args_os()));
}

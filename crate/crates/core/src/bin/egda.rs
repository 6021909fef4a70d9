fn main() {
    std::process::exit(egda::cli::run(std::env::args_os()));
}

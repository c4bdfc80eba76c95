fn main() {
    std::process::exit(pqsq_cli::run(std::env::args_os()));
}

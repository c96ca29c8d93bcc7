fn main() {
    std::process::exit(dacqc::cli::run(std::env::args_os()));
}

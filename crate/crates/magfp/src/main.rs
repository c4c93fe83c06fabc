fn main() {
    std::process::exit(magfp::cli::run(std::env::args_os().collect()));
}

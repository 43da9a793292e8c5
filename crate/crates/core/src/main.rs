fn main() {
    std::process::exit(gpgp::cli::run(std::env::args_os()));
}

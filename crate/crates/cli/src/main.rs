fn main() {
    std::process::exit(randcorr_cli::run(std::env::args_os()));
}

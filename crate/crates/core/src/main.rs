fn main() {
    std::process::exit(lossescape::cli::run(std::env::args_os()));
}

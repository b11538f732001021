fn main() {
    std::process::exit(polytoep::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(nutpose_cli::run_from(std::env::args_os()));
}

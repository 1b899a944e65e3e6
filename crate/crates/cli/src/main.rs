fn main() {
    std::process::exit(tabaug_cli::run_from(std::env::args_os()));
}

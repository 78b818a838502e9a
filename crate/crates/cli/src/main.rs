fn main() {
    std::process::exit(nadir_cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(fairtopk_cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(influence_cli::run(std::env::args_os()));
}

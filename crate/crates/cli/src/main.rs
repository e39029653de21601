fn main() {
    std::process::exit(antasid_cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(helegraph_cli::run(std::env::args_os()));
}

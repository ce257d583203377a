fn main() {
    std::process::exit(wcheap_cli::run(std::env::args_os()));
}

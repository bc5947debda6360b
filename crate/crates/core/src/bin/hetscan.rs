fn main() {
    std::process::exit(hetscan::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(blockperm::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(digestweaver_cli::run(std::env::args_os()));
}

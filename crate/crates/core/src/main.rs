fn main() {
    std::process::exit(cdgesture::cli::run(std::env::args_os()));
}

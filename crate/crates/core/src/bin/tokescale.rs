fn main() {
    std::process::exit(tokescale::cli::run(std::env::args_os()));
}

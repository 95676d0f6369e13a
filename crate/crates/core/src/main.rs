fn main() {
    std::process::exit(cdr_demographics::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(qsearch::cli::run(std::env::args_os()));
}

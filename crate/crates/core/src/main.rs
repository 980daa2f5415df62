fn main() {
    std::process::exit(ldsc_forge::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(nlreg_core::cli::run(std::env::args_os()));
}

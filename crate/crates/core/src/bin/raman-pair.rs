fn main() {
    std::process::exit(raman_pair::cli::run(std::env::args_os()));
}

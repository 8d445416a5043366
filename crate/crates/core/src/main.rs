fn main() {
    std::process::exit(trapsim::cli::run(std::env::args_os()));
}

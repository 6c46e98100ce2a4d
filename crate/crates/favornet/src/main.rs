fn main() {
    std::process::exit(favornet::cli::run(std::env::args_os()));
}

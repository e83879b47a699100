fn main() {
    std::process::exit(v2vsim::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(ranger::run(std::env::args_os()));
}

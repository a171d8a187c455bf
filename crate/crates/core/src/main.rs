fn main() {
    std::process::exit(nutaxis::cli::main_from(std::env::args_os()));
}

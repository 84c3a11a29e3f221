fn main() {
    std::process::exit(cowshade::cli::run_from(std::env::args_os()));
}

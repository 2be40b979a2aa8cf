fn main() {
    std::process::exit(vb_odmr::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(dispatch_region::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(imodels::cli::run(std::env::args_os()));
}

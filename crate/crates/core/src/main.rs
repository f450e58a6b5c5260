fn main() {
    std::process::exit(nodal_lab::cli::run(std::env::args_os()));
}

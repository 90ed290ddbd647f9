fn main() {
    std::process::exit(lifted_nmf_cli::run(std::env::args_os()));
}

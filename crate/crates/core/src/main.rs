fn main() {
    env_logger::init();
    std::process::exit(coherent_ensembles::cli::run(std::env::args_os()));
}

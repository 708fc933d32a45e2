fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("GPK_LOG", "warn")).init();
    std::process::exit(gpk::cli::run(std::env::args_os()));
}

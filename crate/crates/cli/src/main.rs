fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = ctrlc::set_handler(|| {
        couette_cli::flush_interrupted();
        std::process::exit(couette_cli::EXIT_INTERRUPTED);
    }) {
        log::warn!("no interrupt handler: {e}");
    }
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(couette_cli::run(&argv));
}

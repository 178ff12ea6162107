use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = acfdi_cli::commands::Cli::parse();
    if let Err(e) = acfdi_cli::commands::run(cli) {
        eprintln!("acfdi: {e}");
        std::process::exit(e.exit_code());
    }
}

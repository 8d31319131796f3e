use clap::Parser;

fn main() -> anyhow::Result<()> {
    let cli = gmr_cli::Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .parse_env("RUST_LOG")
        .init();
    gmr_cli::run(cli)
}

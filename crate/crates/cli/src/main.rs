use clap::Parser;
use mglda_cli::args::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    if let Err(e) = mglda_cli::run(cli, &mut stdout.lock()) {
        eprintln!("mglda: {e}");
        std::process::exit(e.exit_code());
    }
}

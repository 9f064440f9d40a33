use clap::Parser;

fn main() {
    let cli = epr_cli::Cli::parse();
    if let Err(error) = epr_cli::run(cli) {
        eprintln!("{error}");
        std::process::exit(error.exit_code());
    }
}

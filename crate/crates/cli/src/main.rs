use clap::Parser;

use saff_cli::args::Cli;
use saff_cli::commands;

fn main() {
    let cli = Cli::parse();
    if let Err(failure) = commands::dispatch(&cli) {
        eprintln!("error: {}", failure.message());
        std::process::exit(failure.exit_code());
    }
}

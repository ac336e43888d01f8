use clap::Parser;

use parrondo_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    std::process::exit(parrondo_cli::exit_code(&cli));
}

use clap::Parser;

use curatron_cli::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = curatron_cli::execute(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

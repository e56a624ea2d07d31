use clap::Parser;
use hybrid_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("hybrid: {e}");
        std::process::exit(e.exit_code());
    }
}

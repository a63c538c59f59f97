use clap::Parser;
use reflow_shift_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = reflow_shift_cli::run(cli) {
        eprintln!("error[{}]: {e}", e.kind());
        std::process::exit(e.exit_code());
    }
}

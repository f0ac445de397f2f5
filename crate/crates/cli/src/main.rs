use clap::Parser;
use nonlocality_lab::{configure_threads, emit, run, Cli};

fn main() {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|_| run(&cli)).and_then(|out| emit(&cli, &out));
    if let Err(e) = outcome {
        eprintln!("nonlocality-lab: {e}");
        std::process::exit(e.exit_code());
    }
}

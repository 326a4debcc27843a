use clap::Parser;
use hardywave_cli::{report, run, Cli};

fn main() {
    let cli = Cli::parse();
    let code = report(&run(&cli));
    std::process::exit(code);
}

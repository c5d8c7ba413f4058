use clap::Parser;

use sampled_card_cli::{commands, Cli};

fn main() {
    let cli = Cli::parse();
    std::process::exit(commands::run(cli));
}

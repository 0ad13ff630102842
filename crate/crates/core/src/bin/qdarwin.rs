use clap::Parser;
use qdarwin::cli::{run, Cli};

fn main() {
    std::process::exit(run(&Cli::parse()));
}

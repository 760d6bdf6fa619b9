use clap::Parser;
use nonbloch::cli::{run, Cli};

fn main() {
    std::process::exit(run(&Cli::parse()));
}

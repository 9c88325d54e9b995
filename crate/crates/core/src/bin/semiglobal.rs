use clap::Parser;
use semiglobal::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}

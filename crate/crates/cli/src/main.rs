use clap::Parser;
use dreamcode::commands::{execute, Cli};

fn main() {
    match execute(Cli::parse()) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}

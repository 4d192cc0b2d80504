use clap::Parser;
use fraisse_lab::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let (status, report) = run(&cli);
    println!("{report}");
    std::process::exit(status as i32);
}

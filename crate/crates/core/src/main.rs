use clap::Parser;

fn main() {
    std::process::exit(tdgnep::cli::run(tdgnep::cli::Cli::parse()));
}

use clap::Parser;

fn main() {
    std::process::exit(cee_interp::cli::run(cee_interp::cli::Cli::parse()));
}

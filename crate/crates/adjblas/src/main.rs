use clap::Parser;

fn main() {
    let cli = adjblas::cli::Cli::parse();
    std::process::exit(adjblas::cli::run(cli));
}

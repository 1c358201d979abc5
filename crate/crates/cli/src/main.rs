use clap::Parser;

fn main() {
    let cli = fluxnet_cli::Cli::parse();
    std::process::exit(fluxnet_cli::execute(&cli));
}

use clap::Parser;

fn main() {
    let cli = heatstep_cli::Cli::parse();
    std::process::exit(heatstep_cli::run(cli));
}

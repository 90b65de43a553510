use clap::Parser;

fn main() {
    let cli = ancientflow_cli::Cli::parse();
    std::process::exit(ancientflow_cli::main_with(cli));
}

use clap::Parser;

fn main() {
    let cli = recourse_cli::Cli::parse();
    std::process::exit(recourse_cli::run(&cli));
}

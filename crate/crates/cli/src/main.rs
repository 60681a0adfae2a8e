use clap::Parser;

fn main() {
    let cli = optest_cli::Cli::parse();
    std::process::exit(optest_cli::main_with(&cli));
}

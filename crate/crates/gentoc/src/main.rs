use clap::Parser;

fn main() {
    let cli = gentoc::cli::Cli::parse();
    if let Err(e) = gentoc::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

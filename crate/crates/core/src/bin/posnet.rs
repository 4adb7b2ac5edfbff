use clap::Parser;

fn main() {
    let cli = posnet::cli::Cli::parse();
    let code = posnet::cli::run(cli, &mut std::io::stdout());
    std::process::exit(code);
}

use clap::Parser;

fn main() {
    let cli = riesz_limsup::cli::Cli::parse();
    std::process::exit(riesz_limsup::cli::main_with(cli));
}

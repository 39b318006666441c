use clap::Parser;

fn main() {
    let cli = inlslab::Cli::parse();
    std::process::exit(inlslab::run(&cli, &inlslab::config::process_env()));
}

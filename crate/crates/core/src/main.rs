use clap::Parser;

fn main() {
    let args = catk::cli::Args::parse();
    std::process::exit(catk::cli::main_with(&args));
}

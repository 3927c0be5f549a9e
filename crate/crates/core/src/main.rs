use clap::Parser;

fn main() {
    let cli = modal::cli::Cli::parse();
    let code = std::panic::catch_unwind(|| modal::cli::run(cli)).unwrap_or_else(|_| {
        eprintln!("error: internal invariant violated");
        modal::cli::EXIT_INTERNAL
    });
    std::process::exit(code);
}

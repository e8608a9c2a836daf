use clap::Parser;

fn main() {
    let cli = nsmds_cli::cli::Cli::parse();
    let code = match nsmds_cli::cli::run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            2
        }
    };
    std::process::exit(code);
}

use grf_kit::cli::{self, CliError};

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    match cli::run(&argv) {
        Ok(()) => {}
        Err(CliError::Help(text)) => {
            println!("{text}");
        }
        Err(err) => {
            eprintln!("error: {}", err.message());
            std::process::exit(err.exit_code());
        }
    }
}

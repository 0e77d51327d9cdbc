use std::process::ExitCode;

use qrm_cli::Outcome;

fn main() -> ExitCode {
    let threads = std::env::var("QRM_THREADS").ok();
    match qrm_cli::run(std::env::args_os(), threads.as_deref()) {
        Ok(Outcome::Wrote(dir)) => {
            println!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Ok(Outcome::Report(text) | Outcome::Display(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use twistkit_cli::args::Cli;
use twistkit_cli::{run, EXIT_IO, EXIT_OK, EXIT_USAGE, EXIT_VERIFICATION};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { EXIT_OK as u8 });
        }
    };
    let mut out: Box<dyn Write> = match &cli.global.out {
        Some(path) => match File::create(path) {
            Ok(f) => Box::new(BufWriter::new(f)),
            Err(e) => {
                eprintln!("cannot open {}: {e}", path.display());
                return ExitCode::from(EXIT_IO as u8);
            }
        },
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let code = match run(&cli, &mut out) {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            eprintln!("verification failed");
            EXIT_VERIFICATION
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

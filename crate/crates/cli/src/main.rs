use clap::Parser;
use std::process::ExitCode;
use towerforge_cli::{run, RunConfig, EXIT_INPUT};

fn main() -> ExitCode {
    let config = match RunConfig::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&config) {
        Ok(out) => {
            if config.output.is_some() {
                print!("{}", out.text);
            } else {
                print!("{}", out.json);
                eprint!("{}", out.text);
            }
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("towerforge: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

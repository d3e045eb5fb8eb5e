use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use bcheun_cli::{run, Cli, CliError, Command};

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bcheun: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn real_main() -> Result<(), CliError> {
    let cfg = Cli::parse().resolve()?;
    let report = run(&cfg)?;
    for w in &report.warnings {
        eprintln!("bcheun: warning: {w}");
    }
    if cfg.command == Command::Verify {
        if let Some(lines) = report.diagnostics.get("summary").and_then(|v| v.as_array()) {
            for line in lines.iter().filter_map(|l| l.as_str()) {
                eprintln!("{line}");
            }
        }
    }

    let text = report.render(cfg.format);
    match &cfg.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut out = std::io::stdout().lock();
            // a closed pipe is not worth a panic
            let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
        }
    }

    match report.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

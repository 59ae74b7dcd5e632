use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kppspread::{config, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "kppspread", version, about = "Spreading speeds, fronts and certificates for nonlocal KPP equations")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the command named in a config file.
    Run {
        config: PathBuf,
        /// Override a config value, e.g. `--set kernel.a=2`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Output directory; overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a certificate record.
    Verify {
        certificate: PathBuf,
        /// Model and tolerances; defaults to the model stored in the record.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE", requires = "config")]
        sets: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(cmd: Cmd) -> Result<RunConfig, CliError> {
    match cmd {
        Cmd::Run { config, sets, out } => {
            let mut cfg = config::load(&config, &sets)?;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            Ok(cfg)
        }
        Cmd::Verify {
            certificate,
            config,
            mut sets,
            out,
        } => {
            let out = out.unwrap_or_else(|| PathBuf::from("out"));
            match config {
                None => Ok(RunConfig::for_verify(certificate, out)),
                Some(path) => {
                    // the certificate argument is relative to the working directory
                    let cert = std::path::absolute(&certificate).map_err(|e| CliError::io(&certificate, e))?;
                    sets.push("command=\"verify\"".into());
                    sets.push(format!("verify.certificate={}", toml::Value::String(cert.display().to_string())));
                    let mut cfg = config::load(&path, &sets)?;
                    cfg.output_dir = out;
                    Ok(cfg)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = load(cli.command).and_then(|cfg| {
        cfg.validate()?;
        kppspread::run(&cfg)
    });
    match outcome {
        Ok(o) => {
            print!("{}", o.report);
            for f in &o.files {
                eprintln!("wrote {}", f.display());
            }
            for f in &o.failures {
                eprintln!("verification failed: {f}");
            }
            ExitCode::from(o.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

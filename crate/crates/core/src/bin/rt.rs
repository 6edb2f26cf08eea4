use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rtensor::dsl::{self, Environment, StmtKind};

#[derive(Parser)]
#[command(name = "rt", about = "Evaluate indexed tensor expressions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate one expression or statement.
    Eval {
        expr: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `name=expr`, evaluated before the expression. Repeatable.
        #[arg(long = "define", value_name = "NAME=EXPR")]
        defines: Vec<String>,
        /// Print {value, dims, indices} records instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Run a script file.
    Run {
        script: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

fn execute_all(src: &str, env: &mut Environment, json: bool) -> Result<(), dsl::DslError> {
    if !json {
        return dsl::run(src, env, &mut |line| println!("{line}"));
    }
    for stmt in dsl::parse(src)? {
        let v = dsl::execute(&stmt, env)?;
        if !matches!(stmt.kind, StmtKind::Assert(_)) {
            println!("{}", env.to_json(&v));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Eval { expr, seed, defines, json } => {
            let mut env = Environment::new(seed);
            let mut result = Ok(());
            for d in &defines {
                let Some((name, rhs)) = d.split_once('=') else {
                    eprintln!("rt: --define expects NAME=EXPR, got `{d}`");
                    return ExitCode::FAILURE;
                };
                let stmt = format!("{} = {}", name.trim(), rhs.trim());
                if let Err(e) = dsl::run(&stmt, &mut env, &mut |_| {}) {
                    result = Err(format!("--define {d}: {e}"));
                    break;
                }
            }
            result.and_then(|_| execute_all(&expr, &mut env, json).map_err(|e| e.to_string()))
        }
        Cmd::Run { script, seed, json } => match std::fs::read_to_string(&script) {
            Ok(src) => execute_all(&src, &mut Environment::new(seed), json)
                .map_err(|e| format!("{}:{e}", script.display())),
            Err(e) => Err(format!("{}: {e}", script.display())),
        },
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("rt: {msg}");
            ExitCode::FAILURE
        }
    }
}

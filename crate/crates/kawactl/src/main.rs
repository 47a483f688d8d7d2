use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use kawactl::{execute, Mode};

#[derive(Parser)]
#[command(name = "kawactl", version, about = "Kawahara solves, control synthesis and verification runs")]
struct Args {
    /// What to run.
    #[arg(value_enum)]
    mode: Mode,
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; defaults to the scenario's `output`, then
    /// `kawactl-out/<mode>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the verification suite.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match execute(args.mode, &args.scenario, args.out, args.seed) {
        Ok(rec) => {
            for c in &rec.checks {
                let tag = if c.pass { "ok  " } else { "FAIL" };
                println!("{tag} {} = {:e} ({} {:e})", c.name, c.value, c.relation, c.limit);
            }
            if let Some(e) = &rec.error {
                eprintln!("error [{}]: {}", e.module, e.message);
            }
            println!("{} -> {} (exit {})", rec.mode, rec.output.display(), rec.exit_code);
            rec.exit_code
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

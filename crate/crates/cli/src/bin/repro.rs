//! Runs a reproduction manifest against the `sampled-card` binary and prints
//! a pass/fail CSV report. Exits 1 if any row falls outside its band.

use std::path::PathBuf;

use clap::Parser;

use sampled_card_cli::manifest::{evaluate_rows, parse_manifest, run_cli, RowOutcome};

#[derive(Debug, Parser)]
#[command(name = "sampled-card-repro", version, about)]
struct Args {
    /// Manifest file.
    #[arg(long, default_value = "repro/manifest.txt")]
    manifest: PathBuf,

    /// CLI binary; defaults to `sampled-card` next to this executable.
    #[arg(long)]
    cli: Option<PathBuf>,
}

fn main() {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.manifest) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.manifest.display());
            std::process::exit(2);
        }
    };
    let rows = match parse_manifest(&text) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    let cli = args.cli.unwrap_or_else(|| {
        let exe = std::env::current_exe().expect("current executable path");
        exe.with_file_name(format!("sampled-card{}", std::env::consts::EXE_SUFFIX))
    });

    let outcomes = evaluate_rows(&rows, |argv| {
        eprintln!("running: sampled-card {}", argv.join(" "));
        run_cli(&cli, argv)
    });
    println!("{}", RowOutcome::CSV_HEADER);
    for outcome in &outcomes {
        println!("{}", outcome.to_csv());
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    eprintln!(
        "{} rows, {} passed, {} failed",
        outcomes.len(),
        outcomes.len() - failed,
        failed
    );
    std::process::exit(if failed == 0 { 0 } else { 1 });
}

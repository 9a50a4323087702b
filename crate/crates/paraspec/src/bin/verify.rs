use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use paraspec::suites::{default_out_dir, run_suites, write_outcome, SuiteConfig, DEFAULT_SEED};
use paraspec::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Run a verification suite and write its decay reports.
#[derive(Parser, Debug)]
#[command(name = "verify")]
struct Args {
    /// Suite name, or `all`.
    suite: String,
    /// Grid size exponent (N = 2^exp).
    #[arg(long)]
    grid_exp: Option<u32>,
    #[arg(long)]
    period: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, allow_hyphen_values = true)]
    jmin: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    jmax: Option<i32>,
    /// Smallest `j` with `h = 2^-j` for the semiclassical suites.
    #[arg(long)]
    hmin_exp: Option<i32>,
    #[arg(long)]
    hmax_exp: Option<i32>,
    /// Output directory; defaults to $PARASPEC_OUT or `reports`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Format printed to stdout. Both formats are always written to disk.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn run(args: Args) -> Result<bool, Error> {
    let cfg = SuiteConfig {
        grid_exp: args.grid_exp,
        period: args.period,
        seed: args.seed,
        jmin: args.jmin,
        jmax: args.jmax,
        hmin_exp: args.hmin_exp,
        hmax_exp: args.hmax_exp,
    };
    cfg.validate()?;
    let dir = args.out.unwrap_or_else(default_out_dir);
    let mut all_pass = true;
    for outcome in run_suites(&args.suite, &cfg)? {
        write_outcome(&outcome, &dir)?;
        for r in &outcome.reports {
            match args.format {
                Format::Json => println!("{}", r.to_json()?),
                Format::Csv => print!("{}", r.to_csv()?),
            }
            eprintln!("{} {} slope={:.4} bound={}", if r.pass { "PASS" } else { "FAIL" }, r.suite_id, r.fitted_slope, r.expected_bound);
        }
        all_pass &= outcome.pass();
    }
    Ok(all_pass)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ (Error::Config(_) | Error::InvalidInput(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

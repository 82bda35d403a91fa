//! Batch CLI for the owsm link-level simulator.
//!
//! Subcommands: `sweep <config>` runs the configured Monte Carlo BER sweep
//! and emits CSV, `channel <config>` prints the channel matrix and its
//! condition number, `selftest` runs the built-in invariant suite.
//! Exit codes: 0 success, 1 configuration error, 2 runtime error.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use owsm::sim::{self, report, ChannelSpec};
use owsm::{Error, Scheme};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "owsm",
    version,
    about = "OFDM optical spatial modulation link simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run the configured BER sweep and emit CSV (stdout unless --out).
    Sweep(SweepArgs),
    /// Print the configured channel matrix and its condition number.
    Channel { config: PathBuf },
    /// Run the built-in invariant suite.
    Selftest,
}

#[derive(Args)]
struct SweepArgs {
    /// Config file (key = value lines).
    config: PathBuf,
    /// Write the CSV report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write (snr_db, log10 ber) pairs per scheme for plotting.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    /// Worker threads for frame simulation (0 = library default).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Override the schemes (comma list: fdsm,tdsm-map,tdsm-zf).
    #[arg(long)]
    scheme: Option<String>,
    /// Override the SNR grid in dB (comma list).
    #[arg(long)]
    snr_db: Option<String>,
    /// Override the channel spec (identity | overlap:rho=..,gain=.. | geometry:<path> | csv:<path>).
    #[arg(long)]
    channel: Option<String>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the FFT size.
    #[arg(long)]
    n_fft: Option<usize>,
    /// Override the cyclic prefix length.
    #[arg(long)]
    n_cp: Option<usize>,
    /// Override the constellation order.
    #[arg(long)]
    m_order: Option<usize>,
    /// Override the LED count.
    #[arg(long)]
    n_tx: Option<usize>,
    /// Override the PD count.
    #[arg(long)]
    n_rx: Option<usize>,
    /// Override the DC bias in dB.
    #[arg(long)]
    bias_db: Option<f64>,
    /// Override the frame budget per point.
    #[arg(long)]
    max_frames: Option<u64>,
    /// Override the bit-error target per point.
    #[arg(long)]
    target_errors: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_config() { 1 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Sweep(args) => sweep(args),
        Command::Channel { config } => channel(config),
        Command::Selftest => selftest(),
    }
}

fn load_config(path: &Path) -> Result<sim::FileConfig, Error> {
    let parsed = sim::parse_config(path)?;
    for warning in &parsed.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(parsed.file)
}

fn set<T: Copy>(field: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *field = v;
    }
}

/// CLI flags override values from the config file.
fn apply_overrides(file: &mut sim::FileConfig, args: &SweepArgs) -> Result<(), Error> {
    if let Some(schemes) = &args.scheme {
        file.schemes = schemes
            .split(',')
            .map(|s| s.parse::<Scheme>())
            .collect::<Result<_, _>>()?;
    }
    if let Some(snr) = &args.snr_db {
        file.sim.snr_grid_db = snr
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("--snr-db: `{tok}` is not a number")))
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(spec) = &args.channel {
        file.channel = ChannelSpec::parse(spec)?;
    }
    let s = &mut file.sim;
    set(&mut s.master_seed, args.seed);
    set(&mut s.n_fft, args.n_fft);
    set(&mut s.n_cp, args.n_cp);
    set(&mut s.m_order, args.m_order);
    set(&mut s.n_tx, args.n_tx);
    set(&mut s.n_rx, args.n_rx);
    set(&mut s.bias_db, args.bias_db);
    set(&mut s.max_frames, args.max_frames);
    set(&mut s.target_bit_errors, args.target_errors);
    s.validate()
}

fn sweep(args: SweepArgs) -> Result<(), Error> {
    let mut file = load_config(&args.config)?;
    apply_overrides(&mut file, &args)?;
    let h = file.channel.build(file.sim.n_rx, file.sim.n_tx)?;
    let report = sim::with_worker_threads(args.threads, || {
        sim::run_sweep(&file.sim, &file.schemes, &h)
    })?;
    let csv = report::to_csv_string(&report);
    match &args.out {
        Some(path) => std::fs::write(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = &args.plot_data {
        report::emit_plot_data(&report, path)?;
    }
    Ok(())
}

fn channel(config: PathBuf) -> Result<(), Error> {
    let file = load_config(&config)?;
    let h = file.channel.build(file.sim.n_rx, file.sim.n_tx)?;
    println!(
        "channel: {} ({}), {}x{}",
        file.channel,
        h.provenance(),
        h.n_rx(),
        h.n_tx()
    );
    match owsm::channel::condition_number(&h) {
        Ok(rho) => println!("rho: {rho}"),
        Err(_) => println!("rho: undefined (non-square)"),
    }
    print!("{}", h.to_csv());
    Ok(())
}

fn selftest() -> Result<(), Error> {
    let mut failures = 0;
    for (name, outcome) in sim::selftest::run_all() {
        match outcome {
            Ok(()) => println!("ok   {name}"),
            Err(err) => {
                failures += 1;
                println!("FAIL {name}: {err}");
            }
        }
    }
    if failures > 0 {
        return Err(Error::Failure(format!(
            "selftest: {failures} checks failed"
        )));
    }
    println!("all checks passed");
    Ok(())
}

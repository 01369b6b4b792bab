use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use regen_cli::commands::{self, CodeOptions, InfoReport};
use regen_cli::CliError;
use regen_core::Mode;

#[derive(Parser)]
#[command(
    name = "regen",
    version,
    about = "Product-matrix regenerating codes for files"
)]
struct Cli {
    /// Print results as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Msr,
    Mbr,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Msr => Mode::Msr,
            ModeArg::Mbr => Mode::Mbr,
        }
    }
}

#[derive(Args)]
struct CodeArgs {
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Repair degree; fixed to 2k-2 for MSR.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 1)]
    beta: usize,
}

impl CodeArgs {
    fn options(&self) -> CodeOptions {
        CodeOptions {
            mode: self.mode.into(),
            n: self.n,
            k: self.k,
            d: self.d,
            beta: self.beta,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Encode a file into n shard files.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        code: CodeArgs,
    },
    /// Delete and/or corrupt shards in place.
    Damage {
        #[arg(long)]
        dir: PathBuf,
        /// Node ids whose shard files are deleted.
        #[arg(long, value_delimiter = ',')]
        erase: Vec<usize>,
        /// Node ids whose shard bodies are overwritten with random symbols.
        #[arg(long, value_delimiter = ',')]
        corrupt: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Regenerate one node's shard from d + s + 2t helpers.
    Repair {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        node: usize,
        #[arg(long, default_value_t = 0)]
        s: usize,
        #[arg(long, default_value_t = 0)]
        t: usize,
        /// Output path; defaults to the node's file in --dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overwrite an existing output file.
        #[arg(long)]
        force: bool,
    },
    /// Rebuild the original file from k + s + 2t nodes.
    Reconstruct {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        s: usize,
        #[arg(long, default_value_t = 0)]
        t: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parameters, capacity bound and the feasible (s, t) table.
    ///
    /// Give one of: --dir; --mode with --n --k [--d] [--beta]; --k --d
    /// --alpha --beta [--n]; or --alpha --beta --delta --kappa [--s] [--t].
    Info(InfoArgs),
    /// Replay a TOML scenario in the simulator; prints one JSON line per event.
    Simulate {
        scenario: PathBuf,
        /// Write the event records here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InfoArgs {
    #[arg(long)]
    dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    alpha: Option<usize>,
    #[arg(long)]
    beta: Option<usize>,
    #[arg(long)]
    delta: Option<usize>,
    #[arg(long)]
    kappa: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
}

fn need(v: Option<usize>, flag: &str) -> Result<usize, CliError> {
    v.ok_or_else(|| CliError::BadArgs(format!("--{flag} is required here")))
}

fn info(a: &InfoArgs) -> Result<InfoReport, CliError> {
    if let Some(dir) = &a.dir {
        return commands::info_dir(dir);
    }
    if a.delta.is_some() || a.kappa.is_some() {
        return commands::info_resilient(
            need(a.alpha, "alpha")?,
            need(a.beta, "beta")?,
            need(a.delta, "delta")?,
            need(a.kappa, "kappa")?,
            a.s.unwrap_or(0),
            a.t.unwrap_or(0),
        );
    }
    if let Some(mode) = a.mode {
        return commands::info_params(&CodeOptions {
            mode: mode.into(),
            n: need(a.n, "n")?,
            k: need(a.k, "k")?,
            d: a.d,
            beta: a.beta.unwrap_or(1),
        });
    }
    if a.alpha.is_some() {
        return commands::info_bound(
            need(a.k, "k")?,
            need(a.d, "d")?,
            need(a.alpha, "alpha")?,
            need(a.beta, "beta")?,
            a.n,
        );
    }
    Err(CliError::BadArgs(
        "info needs --dir, --mode, --alpha, or --delta/--kappa".into(),
    ))
}

fn emit<T: Serialize>(json: bool, value: &T, human: impl FnOnce() -> String) {
    if json {
        println!("{}", serde_json::to_string(value).expect("serializable"));
    } else {
        print!("{}", human());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let json = cli.json;
    match cli.command {
        Command::Encode { input, out, code } => {
            let r = commands::encode_file(&input, &out, &code.options())?;
            emit(json, &r, || {
                format!(
                    "{}, q={}: {} bytes in {} blocks, {} shards written to {}\n",
                    r.params,
                    r.q,
                    r.byte_len,
                    r.blocks,
                    r.shards.len(),
                    out.display()
                )
            });
        }
        Command::Damage {
            dir,
            erase,
            corrupt,
            seed,
        } => {
            let r = commands::damage(&dir, &erase, &corrupt, seed)?;
            emit(json, &r, || {
                format!("erased {:?}, corrupted {:?}\n", r.erased, r.corrupted)
            });
        }
        Command::Repair {
            dir,
            node,
            s,
            t,
            out,
            force,
        } => {
            let r = commands::repair(&dir, node, s, t, out.as_deref(), force)?;
            emit(json, &r, || {
                format!(
                    "repaired node {} from helpers {:?}\ndownloaded {} symbols\nwrote {}\n",
                    r.node,
                    r.helpers,
                    r.symbols_downloaded,
                    r.output.display()
                )
            });
        }
        Command::Reconstruct { dir, s, t, out } => {
            let r = commands::reconstruct(&dir, s, t, &out)?;
            emit(json, &r, || {
                format!(
                    "reconstructed {} bytes from nodes {:?}\ndownloaded {} symbols\nwrote {}\n",
                    r.byte_len,
                    r.nodes,
                    r.symbols_downloaded,
                    out.display()
                )
            });
        }
        Command::Info(args) => {
            let r = info(&args)?;
            emit(json, &r, || r.to_string());
        }
        Command::Simulate { scenario, out } => {
            let summary = commands::simulate(&scenario)?;
            let mut sink: Box<dyn Write> = match &out {
                Some(p) => Box::new(BufWriter::new(
                    File::create(p).map_err(|e| CliError::io(p, e))?,
                )),
                None => Box::new(std::io::stdout().lock()),
            };
            let io = |e: std::io::Error| CliError::Io(e.to_string());
            for report in &summary.reports {
                writeln!(
                    sink,
                    "{}",
                    serde_json::to_string(report).expect("serializable")
                )
                .map_err(io)?;
            }
            sink.flush().map_err(io)?;
            eprintln!(
                "{} events, success rate {:.3}, {} symbols downloaded",
                summary.reports.len(),
                summary.success_rate(),
                summary.total_symbols_downloaded
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("regen: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

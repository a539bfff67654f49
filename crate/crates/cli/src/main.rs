use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use relcover::geometry::{GeometryError, SAFE_Q};
use relcover::incidence::Sampling;
use relcover::report::{run_search, RunReport, Statement, Verifier, VerifyOptions};
use relcover::{GeometryBundle, SearchConfig, SearchMode};

const EXIT_FALSIFIED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "relcover",
    version,
    about = "Relative m-covers of H(3,q^2) with respect to W(3,q)"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct the geometry and write a cache file.
    Build {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        out: PathBuf,
        /// Allow q outside {2,3,4}.
        #[arg(long = "unsafe")]
        allow_unsafe: bool,
    },
    /// Run catalogue checks and stream a JSON-lines report.
    Verify {
        #[command(flatten)]
        source: Source,
        #[arg(long, conflicts_with = "only")]
        all: bool,
        /// Statement ids, comma separated or repeated.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        #[arg(long, default_value_t = 10_000)]
        sample_budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Node budget of the cover searches behind THM1A/THM1B when q > 2.
        #[arg(long, default_value_t = 200_000)]
        budget_nodes: u64,
        /// Include elapsed times (makes reports run-dependent).
        #[arg(long)]
        timings: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for relative m-covers.
    Search {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
        mode: Mode,
        #[arg(long)]
        budget_nodes: Option<u64>,
        #[arg(long)]
        budget_seconds: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        dedup_sigma: bool,
        #[arg(long)]
        timings: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Source {
    /// Geometry cache written by `build`.
    #[arg(long, conflicts_with = "q", required_unless_present = "q")]
    cache: Option<PathBuf>,
    /// Build the geometry in memory instead of loading a cache.
    #[arg(long)]
    q: Option<u32>,
    #[arg(long = "unsafe")]
    allow_unsafe: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exhaustive,
    Budgeted,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

fn build_geometry(q: u32, allow_unsafe: bool) -> Result<GeometryBundle, Failure> {
    if !allow_unsafe && !SAFE_Q.contains(&q) {
        return Err(Failure::usage(format!(
            "q = {q} is outside {SAFE_Q:?}; pass --unsafe to build it anyway (cost grows like q^10)"
        )));
    }
    GeometryBundle::build(q).map_err(|e| match e {
        GeometryError::UnsupportedQ(_) => Failure::usage(e.to_string()),
        other => Failure {
            code: EXIT_FALSIFIED,
            message: other.to_string(),
        },
    })
}

fn load(source: &Source) -> Result<GeometryBundle, Failure> {
    match (&source.cache, source.q) {
        (Some(path), _) => {
            let bytes =
                fs::read(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
            GeometryBundle::from_cache_bytes(&bytes)
                .map_err(|e| Failure::io(format!("{}: {e}", path.display())))
        }
        (None, Some(q)) => build_geometry(q, source.allow_unsafe),
        (None, None) => Err(Failure::usage("one of --cache or --q is required")),
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).map_err(|e| Failure::io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn emit(w: &mut dyn Write, line: &str) -> Result<(), Failure> {
    writeln!(w, "{line}")
        .and_then(|_| w.flush())
        .map_err(|e| Failure::io(e.to_string()))
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("RELCOVER_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::usage(format!(
            "RELCOVER_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::usage(e.to_string()))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    configure_threads()?;
    match cli.cmd {
        Command::Build {
            q,
            out,
            allow_unsafe,
        } => {
            let b = build_geometry(q, allow_unsafe)?;
            fs::write(&out, b.to_cache_bytes())
                .map_err(|e| Failure::io(format!("{}: {e}", out.display())))?;
            println!(
                "{}",
                serde_json::json!({
                    "record": "build", "q": q, "points": b.num_points(), "lines": b.num_lines(),
                    "checksum": b.checksum(), "path": out.display().to_string(),
                })
            );
            Ok(0)
        }
        Command::Verify {
            source,
            all,
            only,
            sample_budget,
            seed,
            budget_nodes,
            timings,
            out,
        } => {
            let statements: Vec<Statement> = if all || only.is_empty() {
                Statement::ALL.to_vec()
            } else {
                only.iter()
                    .map(|id| {
                        Statement::parse(id)
                            .ok_or_else(|| Failure::usage(format!("unknown statement id {id:?}")))
                    })
                    .collect::<Result<_, _>>()?
            };
            let b = load(&source)?;
            let opts = VerifyOptions {
                sampling: Sampling {
                    budget: sample_budget,
                    ..Sampling::default()
                },
                timings,
                search_budget_nodes: budget_nodes,
                seed,
            };
            let mut w = sink(&out)?;
            let report = RunReport::new(&b);
            emit(&mut *w, &report.header_line())?;
            let verifier = Verifier::new(&b, opts);
            let mut pass = true;
            let mut sel = statements;
            sel.sort();
            sel.dedup();
            for st in sel {
                let rec = verifier.run(st);
                pass &= rec.pass;
                emit(&mut *w, &serde_json::to_string(&rec).expect("serializable"))?;
            }
            Ok(if pass { 0 } else { EXIT_FALSIFIED })
        }
        Command::Search {
            source,
            m,
            mode,
            budget_nodes,
            budget_seconds,
            seed,
            dedup_sigma,
            timings,
            out,
        } => {
            if budget_seconds.is_some_and(|s| !s.is_finite() || s < 0.0) {
                return Err(Failure::usage(
                    "--budget-seconds must be a nonnegative number",
                ));
            }
            let b = load(&source)?;
            let cfg = SearchConfig {
                mode: match mode {
                    Mode::Exhaustive => SearchMode::Exhaustive,
                    Mode::Budgeted => SearchMode::Budgeted,
                },
                budget_nodes,
                budget_seconds,
                seed,
                dedup_sigma,
                ..SearchConfig::default()
            };
            let (rec, checks) =
                run_search(&b, m, &cfg, timings).map_err(|e| Failure::usage(e.to_string()))?;
            let mut w = sink(&out)?;
            let report = RunReport::new(&b);
            emit(&mut *w, &report.header_line())?;
            emit(&mut *w, &serde_json::to_string(&rec).expect("serializable"))?;
            let mut pass = rec.all_verified;
            for c in &checks {
                pass &= c.pass;
                emit(&mut *w, &serde_json::to_string(c).expect("serializable"))?;
            }
            Ok(if pass { 0 } else { EXIT_FALSIFIED })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("relcover: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

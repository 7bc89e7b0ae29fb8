use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use crossint::experiment::{
    self, parse_levels, parse_methods, CoeffSource, FieldFormat, Method, Setup,
    DEFAULT_DIVERGENCE_THRESHOLD,
};
use crossint::sparse::{self, SolverConfig, SolverMethod};
use crossint::{Error, GridSpec};

/// Finite element and finite difference solvers for elliptic cross-interface
/// problems on the unit square (f = 1, u = 0 on the boundary).
#[derive(Parser)]
#[command(name = "crossint", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once and print a summary; optionally write the nodal field.
    Solve {
        #[arg(long)]
        method: String,
        #[command(flatten)]
        coeff: CoeffArg,
        #[arg(long)]
        level: u32,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the field as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the assembled matrix in Matrix Market format.
        #[arg(long)]
        matrix_market: Option<PathBuf>,
    },
    /// Self-convergence table: row k compares h = 2^-k with h/2.
    Table {
        #[command(flatten)]
        coeff: CoeffArg,
        #[arg(long, default_value = "both")]
        method: String,
        /// Row levels `k0..k1`; defaults to the preset's reference rows.
        #[arg(long)]
        levels: Option<String>,
        #[command(flatten)]
        solver: SolverArgs,
        /// CSV output (printed as a table on stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare FEM and FDM at one level and report both convergence tables as JSON.
    Compare {
        #[command(flatten)]
        coeff: CoeffArg,
        #[arg(long)]
        level: u32,
        /// Row levels of the convergence tables; defaults to the preset's rows,
        /// or the coarsest admissible level up to level - 1 for files.
        #[arg(long)]
        levels: Option<String>,
        /// rel_inf above which the solutions are flagged divergent (heuristic).
        #[arg(long, default_value_t = DEFAULT_DIVERGENCE_THRESHOLD)]
        threshold: f64,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a solution as CSV or as a PGM heatmap.
    DumpField {
        #[command(flatten)]
        coeff: CoeffArg,
        #[arg(long)]
        method: String,
        #[arg(long)]
        level: u32,
        #[arg(long, default_value = "csv")]
        format: String,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct CoeffArg {
    /// `preset:<ex1|ex2|ex3new|ex3|ex4|ex5|ex7|uniform>` or `file:<path.json>`.
    #[arg(long)]
    coeff: String,
}

impl CoeffArg {
    fn setup(&self) -> Result<Setup, Error> {
        self.coeff.parse::<CoeffSource>()?.resolve()
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value = "direct")]
    solver: String,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Skip row equilibration.
    #[arg(long)]
    no_equilibrate: bool,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig, Error> {
        let cfg = SolverConfig {
            method: self.solver.parse::<SolverMethod>()?,
            rel_tol: self.tol,
            max_iter: self.max_iter,
            equilibrate: !self.no_equilibrate,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        context: format!("writing {}", path.display()),
        source,
    }
}

fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), Error> {
    let mut out = create(path)?;
    f(&mut out).and_then(|_| out.flush()).map_err(|e| io_error(path, e))
}

fn stdout(text: &str) -> Result<(), Error> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|source| Error::Io {
            context: "writing to stdout".into(),
            source,
        })
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Solve {
            method,
            coeff,
            level,
            solver,
            out,
            matrix_market,
        } => {
            let method: Method = method.parse()?;
            let setup = coeff.setup()?;
            let cfg = solver.config()?;
            if let Some(path) = &matrix_market {
                let grid = GridSpec::from_level(level, setup.coeff.m())?;
                let system = match method {
                    Method::Fem => crossint::fem::assemble_fem(&crossint::fem::FemProblem::new(
                        grid,
                        &setup.coeff,
                        &experiment::unit_source,
                    )?)?,
                    Method::Fdm => crossint::fdm::assemble_fdm(&crossint::fdm::FdmProblem::new(
                        grid,
                        &setup.coeff,
                        &experiment::unit_source,
                    )?)?,
                };
                write_with(path, |w| sparse::write_matrix_market(&system.matrix, w))?;
            }
            let u = experiment::solve_level(&setup.coeff, method, level, &cfg)?;
            stdout(&format!(
                "{} {} N={} max|u|={} masked={}\n",
                setup.label,
                method.name(),
                u.n(),
                experiment::sci(u.max_abs()),
                u.masked_count()
            ))?;
            if let Some(path) = &out {
                write_with(path, |w| experiment::write_field_csv(&u, w))?;
            }
        }
        Command::Table {
            coeff,
            method,
            levels,
            solver,
            out,
        } => {
            let setup = coeff.setup()?;
            let methods = parse_methods(&method)?;
            let rows = match levels {
                Some(s) => parse_levels(&s)?,
                None => setup.default_rows.clone().ok_or_else(|| {
                    Error::Usage("--levels is required for coefficient files".into())
                })?,
            };
            let tables = experiment::run_table(&setup.coeff, &methods, rows, &solver.config()?)?;
            match &out {
                Some(path) => write_with(path, |w| experiment::write_table_csv(&tables, w))?,
                None => stdout(&experiment::format_table(&tables))?,
            }
        }
        Command::Compare {
            coeff,
            level,
            levels,
            threshold,
            solver,
            out,
        } => {
            let setup = coeff.setup()?;
            let rows = match levels {
                Some(s) => parse_levels(&s)?,
                None => setup.rows_or(level.saturating_sub(1)),
            };
            let report = experiment::compare(&setup, level, rows, threshold, &solver.config()?)?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            match &out {
                Some(path) => write_with(path, |w| writeln!(w, "{json}"))?,
                None => stdout(&format!("{json}\n"))?,
            }
        }
        Command::DumpField {
            coeff,
            method,
            level,
            format,
            solver,
            out,
        } => {
            let method: Method = method.parse()?;
            let format: FieldFormat = format.parse()?;
            let setup = coeff.setup()?;
            let u = experiment::solve_level(&setup.coeff, method, level, &solver.config()?)?;
            write_with(&out, |w| experiment::write_field(&u, format, w))?;
        }
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    if let Error::Io { source, .. } = err.root() {
        if source.kind() == std::io::ErrorKind::BrokenPipe {
            return 0;
        }
    }
    match err.root() {
        Error::Usage(_) | Error::Format(_) | Error::Dimension(_) => 2,
        Error::Singular(_) | Error::NotConverged { .. } | Error::Solve { .. } => 3,
        Error::Io { .. } => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) if exit_code(&err) == 0 => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

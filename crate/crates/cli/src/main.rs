mod plot;
mod svg;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use valleyjump::config::{self, RunConfig};
use valleyjump::dynamics::{self, InitMode};
use valleyjump::experiments::{self, SweepTable};
use valleyjump::oracle::{self, QuadratureSpec};
use valleyjump::theory;
use valleyjump::validation::Suite;

#[derive(Parser)]
#[command(name = "valleyjump", version, about = "Two-valley SGD model: simulation, sweeps, theory and validation")]
struct Cli {
    /// Run configuration in `section.key = value` format.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    output_dir: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write trajectory.csv and switches.csv.
    Simulate(SimulateArgs),
    /// Run the (eta, sigma) ensemble sweep and write heatmap.csv.
    Sweep(SweepArgs),
    /// Print the freezing table or the theory table as CSV on stdout.
    Theory(TheoryArgs),
    /// Run the oracle and Monte Carlo check suite; exit 1 if any check fails.
    Validate(ValidateArgs),
    /// Render an existing CSV to SVG.
    Plot(plot::PlotArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    t_max: Option<u64>,
    #[arg(long)]
    y0: Option<f64>,
    /// flat_side, sharp_side or alternating (alternating starts flat).
    #[arg(long)]
    init_mode: Option<String>,
    /// Hold y fixed.
    #[arg(long)]
    clamp_y: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Base seed (overrides `grid.base_seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Runs per cell (overrides `grid.runs_per_cell`).
    #[arg(long)]
    runs: Option<usize>,
    /// Also render heatmap SVGs.
    #[arg(long)]
    svg: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Table {
    Freezing,
    Theory,
}

#[derive(Args)]
struct TheoryArgs {
    /// Effective noise values; defaults to a log grid over [1e-5, 1e-1].
    #[arg(long = "delta-s", value_name = "DELTA_S")]
    delta_s: Vec<f64>,
    #[arg(long, value_enum, default_value = "freezing")]
    table: Table,
    /// y values for the theory table; defaults to 20 points over [0.5, 10].
    #[arg(long)]
    y: Vec<f64>,
    /// Freezing constant (overrides `theory.epsilon`).
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Comma-separated check numbers to run (default: all).
    #[arg(long, value_delimiter = ',')]
    only: Vec<u8>,
}

enum Failure {
    /// Exit 1.
    Checks,
    /// Exit 2.
    Usage(String),
}

impl From<valleyjump::Error> for Failure {
    fn from(e: valleyjump::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Outcome {
    let Ok(raw) = std::env::var("VALLEYJUMP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("VALLEYJUMP_THREADS must be a positive integer (got '{raw}')")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut cfg = config::parse_config(&text).map_err(|e| match &cli.config {
        Some(path) => Failure::Usage(format!("{}: {e}", path.display())),
        None => Failure::Usage(e.to_string()),
    })?;
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.clone();
    }
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    log::info!("writing {}", path.display());
    Ok(BufWriter::new(File::create(path)?))
}

fn run(cli: Cli) -> Outcome {
    configure_threads()?;
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Simulate(a) => simulate(cfg, a),
        Command::Sweep(a) => sweep(cfg, a),
        Command::Theory(a) => theory_tables(cfg, a),
        Command::Validate(a) => validate(cfg, a),
        Command::Plot(a) => plot::run(a).map_err(Failure::Usage),
    }
}

fn simulate(cfg: RunConfig, a: SimulateArgs) -> Outcome {
    let mut d = cfg.dynamics;
    if let Some(v) = a.seed {
        d.seed = v;
    }
    if let Some(v) = a.eta {
        d.eta = v;
    }
    if let Some(v) = a.sigma {
        d.sigma = v;
    }
    if let Some(v) = a.t_max {
        d.t_max = v;
    }
    if let Some(v) = a.y0 {
        d.y0 = v;
    }
    if let Some(m) = &a.init_mode {
        d.init_mode = m.parse::<InitMode>()?;
    }
    d.clamp_y |= a.clamp_y;
    d.validate()?;

    let rec = dynamics::simulate(&cfg.landscape, &d)?;
    let mut w = create(&cfg.output_dir, "trajectory.csv")?;
    rec.write_states_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&cfg.output_dir, "switches.csv")?;
    rec.write_switches_csv(&mut w)?;
    w.flush()?;
    eprintln!(
        "final valley {}, {} switches, t_freeze {}{}",
        rec.final_valley,
        rec.switches.len(),
        rec.t_freeze,
        if rec.diverged { ", diverged" } else { "" }
    );
    Ok(())
}

fn sweep(cfg: RunConfig, a: SweepArgs) -> Outcome {
    let mut grid = cfg.grid_or_default();
    if let Some(s) = a.seed {
        grid.base_seed = s;
    }
    if let Some(n) = a.runs {
        grid.runs_per_cell = n;
    }
    grid.validate()?;
    let table = experiments::sweep(&cfg.landscape, &grid, &cfg.dynamics, cfg.epsilon)?;
    if cfg.formats.csv {
        let mut w = create(&cfg.output_dir, "heatmap.csv")?;
        table.write_csv(&mut w)?;
        w.flush()?;
    }
    if cfg.formats.svg || a.svg {
        write_heatmaps(&table, &cfg.output_dir)?;
    }
    let diverged = table.cells.iter().filter(|c| c.stats.divergent).count();
    eprintln!("{} cells, {diverged} divergent", table.cells.len());
    Ok(())
}

fn write_heatmaps(table: &SweepTable, dir: &Path) -> Outcome {
    let rows: Vec<f64> = (0..table.n_eta).map(|i| table.cell(i, 0).eta).collect();
    let cols: Vec<f64> = (0..table.n_sigma).map(|j| table.cell(0, j).sigma).collect();
    let pick = |f: fn(&experiments::SweepCell) -> f64| -> Vec<Option<f64>> {
        table.cells.iter().map(|c| (!c.stats.divergent).then(|| f(c))).collect()
    };
    for (name, title, values) in [
        ("heatmap_p_flat.svg", "P_flat", pick(|c| c.stats.p_flat)),
        ("heatmap_t_freeze.svg", "eta <t_freeze>", pick(|c| c.stats.mean_t_freeze_norm)),
    ] {
        let h = svg::Heatmap { title, rows: &rows, row_label: "eta", cols: &cols, col_label: "sigma", values: &values };
        let mut w = create(dir, name)?;
        w.write_all(svg::heatmap(&h).as_bytes())?;
        w.flush()?;
    }
    Ok(())
}

fn theory_tables(cfg: RunConfig, a: TheoryArgs) -> Outcome {
    let epsilon = a.epsilon.unwrap_or(cfg.epsilon);
    let delta_s = if a.delta_s.is_empty() { experiments::logspace(1e-5, 1e-1, 9) } else { a.delta_s };
    let out = io::stdout().lock();
    match a.table {
        Table::Freezing => theory::write_freezing_table(out, &cfg.landscape, &delta_s, epsilon)?,
        Table::Theory => {
            let ys = if a.y.is_empty() {
                (0..20).map(|i| 0.5 + 9.5 * i as f64 / 19.0).collect()
            } else {
                a.y
            };
            if delta_s.len() != 1 {
                return Err(Failure::Usage("the theory table takes exactly one --delta-s".into()));
            }
            theory::write_theory_table(out, &cfg.landscape, delta_s[0], &ys)?
        }
    }
    Ok(())
}

fn validate(cfg: RunConfig, a: ValidateArgs) -> Outcome {
    if let Some(bad) = a.only.iter().find(|&&id| !(1..=9).contains(&id)) {
        return Err(Failure::Usage(format!("no check numbered {bad} (checks are 1 to 9)")));
    }
    let suite = Suite::from_config(&cfg);
    let ids: Vec<u8> = if a.only.is_empty() { (1..=9).collect() } else { a.only };
    let (checks, table) = suite.run_selected(&ids);
    if let (Some(t), true) = (&table, cfg.formats.csv) {
        let mut w = create(&cfg.output_dir, "validation_sweep.csv")?;
        t.write_csv(&mut w)?;
        w.flush()?;
    }

    if cfg.formats.csv {
        let mut rows = Vec::new();
        for (y, ds) in [(1.0, 2e-3), (2.0, 4e-3), (2.0, 1e-2), (5.0, 1e-2)] {
            rows.extend(oracle::compare_mfpt(&cfg.landscape, ds, y, &QuadratureSpec::default())?);
        }
        let mut w = create(&cfg.output_dir, "oracle_comparison.csv")?;
        oracle::write_comparison_csv(&mut w, &rows)?;
        w.flush()?;
    }

    let mut out = io::stdout().lock();
    for c in &checks {
        writeln!(out, "{}", c.line())?;
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    writeln!(out, "{passed}/{} checks passed", checks.len())?;
    if passed == checks.len() {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dynaph::apps::annulus::{annulus_family, AnnulusParams};
use dynaph::apps::boids::{self, BoidConfig, DEFAULT_SEED};
use dynaph::apps::crocker::{crocker_stack, linspace};
use dynaph::engine::{
    apply_moves, cost_csv, cost_report, plan_moves, run_moves, run_naive, run_vineyard_family, FamilyRun, RunOptions,
    Strategy,
};
use dynaph::error::{Error, Result};
use dynaph::filtration::{reindex_bijection, Filtration};
use dynaph::par::Exec;
use dynaph::reduce::{parse_diagram_csv, Decomposition, GradedPair};
use dynaph::schedule::{move_distance, parse_moves, Permutation};

#[derive(Parser)]
#[command(name = "dynaph", version, about = "Persistent homology of filtration families, updated by moves")]
struct Cli {
    /// Seed for the random generators.
    #[arg(long, global = true, env = "DYNAPH_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads for naive reductions and crocker rows (1 = sequential).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Reduce one filtration file and print its diagram CSV.
    Reduce {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Coords::Index)]
        coords: Coords,
        /// Verify R = DV and the reduced-form invariants.
        #[arg(long)]
        check: bool,
    },
    /// Compute the diagrams of a family and its cumulative cost report.
    Family(FamilyArgs),
    /// Plan the moves carrying one filtration to another.
    Schedule {
        from: PathBuf,
        to: PathBuf,
        #[arg(long, value_enum, default_value_t = Plan::Lcs)]
        strategy: Plan,
        /// Write the schedule here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Crocker stack of a family as long-form CSV.
    Crocker(CrockerArgs),
}

#[derive(Args)]
struct FamilyArgs {
    /// Filtration files, in family order.
    files: Vec<PathBuf>,
    #[arg(long, value_enum, conflicts_with = "files")]
    gen: Option<Generator>,
    /// Frames of the annulus video.
    #[arg(long, default_value_t = 10)]
    frames: usize,
    /// Rips scale cap for the boid family.
    #[arg(long, default_value_t = 0.3)]
    eps_max: f64,
    #[arg(long, value_enum, default_value_t = Method::Moves)]
    strategy: Method,
    /// Apply this schedule file to the single input instead of sweeping.
    #[arg(long, requires = "files")]
    schedule: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Coords::Index)]
    coords: Coords,
    /// Write `member_NNN.csv` and `costs.csv` here instead of printing.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct CrockerArgs {
    #[arg(long, value_enum, conflicts_with = "diagrams")]
    gen: Option<Generator>,
    /// Directory of diagram CSVs (grade coordinates), read in name order.
    #[arg(long)]
    diagrams: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    frames: usize,
    #[arg(long, default_value_t = 0.3)]
    eps_max: f64,
    /// Homological dimension.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Scale grid as `lo:hi:n`.
    #[arg(long, default_value = "0:0.3:31")]
    eps: Grid,
    /// Smoothing values, either `lo:hi:n` or a comma list.
    #[arg(long, default_value = "0")]
    alpha: Grid,
}

#[derive(Clone, Copy, ValueEnum)]
enum Coords {
    Index,
    Grade,
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Annulus,
    Boids,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Method {
    Naive,
    Vineyard,
    Moves,
    Greedy,
}

#[derive(Clone, Copy, ValueEnum)]
enum Plan {
    Lcs,
    Greedy,
}

impl From<Plan> for Strategy {
    fn from(p: Plan) -> Self {
        match p {
            Plan::Lcs => Strategy::Lcs,
            Plan::Greedy => Strategy::Greedy,
        }
    }
}

#[derive(Clone, Debug)]
struct Grid(Vec<f64>);

impl std::str::FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |w: &str| w.trim().parse::<f64>().map_err(|e| format!("`{w}`: {e}"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts[..] {
            [lo, hi, n] => {
                let n = n.trim().parse::<usize>().map_err(|e| format!("`{n}`: {e}"))?;
                Ok(Grid(linspace(num(lo)?, num(hi)?, n)))
            }
            [list] => list.split(',').map(num).collect::<std::result::Result<_, _>>().map(Grid),
            _ => Err(format!("expected `lo:hi:n` or a comma list, got `{s}`")),
        }
    }
}

struct Ctx {
    seed: u64,
    exec: Exec,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = match cli.jobs {
        Some(1) => Exec::Sequential,
        _ => Exec::Parallel,
    };
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.jobs.filter(|&n| n > 1) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let ctx = Ctx { seed: cli.seed, exec };
    let result = match cli.cmd {
        Cmd::Reduce { file, coords, check } => reduce(&file, coords, check),
        Cmd::Family(args) => family(&ctx, args),
        Cmd::Schedule { from, to, strategy, output } => schedule(&from, &to, strategy, output.as_deref()),
        Cmd::Crocker(args) => crocker(&ctx, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Invariant(_) => 3,
                _ => 2,
            })
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Filtration> {
    Filtration::parse(&read(path)?).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn reduce(file: &Path, coords: Coords, check: bool) -> Result<()> {
    let f = load(file)?;
    let dec = Decomposition::from_filtration(&f);
    if check {
        dec.check()?;
    }
    print!("{}", dec.pairs().to_csv(grades(&f, coords)));
    Ok(())
}

fn grades(f: &Filtration, coords: Coords) -> Option<&[f64]> {
    match coords {
        Coords::Index => None,
        Coords::Grade => Some(f.grades()),
    }
}

fn generate(ctx: &Ctx, gen: Generator, frames: usize, eps_max: f64) -> Result<Vec<Filtration>> {
    match gen {
        Generator::Annulus => Ok(annulus_family(AnnulusParams::default(), frames).collect()),
        Generator::Boids => {
            let cfg = BoidConfig { seed: ctx.seed, ..BoidConfig::default() };
            boids::simulate(cfg)?.iter().map(|p| boids::capped_rips(p, eps_max)).collect()
        }
    }
}

fn members(ctx: &Ctx, files: &[PathBuf], gen: Option<Generator>, frames: usize, eps_max: f64) -> Result<Vec<Filtration>> {
    match gen {
        Some(g) => generate(ctx, g, frames, eps_max),
        None if files.is_empty() => Err(Error::Input("no input files or generator given".into())),
        None => files.iter().map(|p| load(p)).collect(),
    }
}

fn family(ctx: &Ctx, args: FamilyArgs) -> Result<()> {
    if let Some(path) = &args.schedule {
        return replay(&args, path);
    }
    let fam = members(ctx, &args.files, args.gen, args.frames, args.eps_max)?;
    let opts = |strategy| RunOptions { strategy, check: args.check };
    let (name, run) = match args.strategy {
        Method::Naive => ("naive", run_naive(&fam, ctx.exec)?),
        Method::Vineyard => ("vineyard", run_vineyard_family(&fam, args.check)?),
        Method::Moves => ("moves", run_moves(&fam, opts(Strategy::Lcs))?),
        Method::Greedy => ("greedy", run_moves(&fam, opts(Strategy::Greedy))?),
    };
    let csvs: Vec<String> = run.diagrams.iter().zip(&fam).map(|(d, f)| d.to_csv(grades(f, args.coords))).collect();
    emit(args.out_dir.as_deref(), &csvs, &cost_csv(&cost_report(&[(name, &run)])))
}

/// Applies a schedule file to the single input and emits the diagrams of
/// the input and of the result.
fn replay(args: &FamilyArgs, path: &Path) -> Result<()> {
    let [file] = &args.files[..] else {
        return Err(Error::Input("--schedule takes exactly one filtration file".into()));
    };
    if matches!(args.coords, Coords::Grade) {
        return Err(Error::Input("--schedule reorders simplices, so only index coordinates are available".into()));
    }
    let f = load(file)?;
    let (m, moves) = parse_moves(&read(path)?).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    if m != f.len() {
        return Err(Error::Input(format!("schedule is for m = {m}, filtration has {} simplices", f.len())));
    }
    let start = Decomposition::from_filtration(&f);
    let end = apply_moves(&f, &moves, args.check)?;
    let run = FamilyRun {
        diagrams: vec![start.pairs(), end.pairs()],
        cumulative: vec![start.counter(), end.counter()],
        steps: vec![0, moves.len()],
        over_budget: 0,
    };
    let csvs: Vec<String> = run.diagrams.iter().map(|d| d.to_csv(None)).collect();
    emit(args.out_dir.as_deref(), &csvs, &cost_csv(&cost_report(&[("schedule", &run)])))
}

fn emit(out_dir: Option<&Path>, diagrams: &[String], costs: &str) -> Result<()> {
    match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for (k, csv) in diagrams.iter().enumerate() {
                fs::write(dir.join(format!("member_{:03}.csv", k + 1)), csv)?;
            }
            fs::write(dir.join("costs.csv"), costs)?;
        }
        None => {
            for (k, csv) in diagrams.iter().enumerate() {
                println!("# member {}", k + 1);
                print!("{csv}");
            }
            println!("# costs");
            print!("{costs}");
        }
    }
    Ok(())
}

fn schedule(from: &Path, to: &Path, strategy: Plan, output: Option<&Path>) -> Result<()> {
    let (a, b) = (load(from)?, load(to)?);
    let d = move_distance(&Permutation::identity(a.len()), &reindex_bijection(&a, &b)?)?;
    let (sched, cost) = plan_moves(&a, &b, strategy.into())?;
    let text = format!("{}# d={d} predicted_col_ops={cost}\n", sched.to_text());
    match output {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn crocker(ctx: &Ctx, args: CrockerArgs) -> Result<()> {
    let diagrams: Vec<Vec<GradedPair>> = match (&args.diagrams, args.gen) {
        (Some(dir), _) => read_diagrams(dir)?,
        (None, Some(g)) => {
            let fam = generate(ctx, g, args.frames, args.eps_max)?;
            let run = run_moves(&fam, RunOptions::default())?;
            run.diagrams.iter().zip(&fam).map(|(d, f)| d.graded(f.grades(), false)).collect()
        }
        (None, None) => return Err(Error::Input("give --diagrams DIR or --gen".into())),
    };
    let stack = crocker_stack(&diagrams, args.dim, &args.eps.0, &args.alpha.0, ctx.exec)?;
    print!("{}", stack.to_csv());
    Ok(())
}

fn read_diagrams(dir: &Path) -> Result<Vec<Vec<GradedPair>>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::Input(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv") && p.file_name().is_some_and(|n| n != "costs.csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Input(format!("{}: no diagram CSVs", dir.display())));
    }
    paths
        .iter()
        .map(|p| parse_diagram_csv(&read(p)?).map_err(|e| Error::Input(format!("{}: {e}", p.display()))))
        .collect()
}

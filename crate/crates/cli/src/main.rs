//! `sumsetlab`: exact sumset computations and threshold checks from the shell.
//!
//! Exit codes: 0 success, 1 a checker reported a counterexample, 2 bad input
//! (including exceeded caps).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sumsetlab_core::corpus::{records_to_csv, records_to_json, sweep, Checker};
use sumsetlab_core::grid::{self, common_resolution};
use sumsetlab_core::hull::{hull_of, Polytope};
use sumsetlab_core::intervals::{
    check_cauchy_davenport, check_lemma_distinct, check_lemma_iterated, freiman_iterated_bound,
};
use sumsetlab_core::io::SetDefinition;
use sumsetlab_core::positioning::{position, verify_certificate};
use sumsetlab_core::rational::{format_rational, parse_rational, Rational};
use sumsetlab_core::theorems::{
    check_long_fibre_claim, check_plunnecke, check_thm_distinct, check_thm_iterated, constant_l,
    delta_t, sharp_family_exact, FamilyKind, SharpFamily,
};
use sumsetlab_core::transport::{check_s1_containment, decompose, optimal_transport, rho_t_check};
use sumsetlab_core::verdict::{Digester, VerdictReport};
use sumsetlab_core::{Error, GridSet, IntervalSet, RationalScalar};

const DEFAULT_MAX_CELLS: u128 = 5_000_000;

#[derive(Parser)]
#[command(name = "sumsetlab", version, about = "Exact Minkowski sums and Brunn-Minkowski threshold checks")]
struct Cli {
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Corpus seed (decimal or 0x-prefixed hex).
    #[arg(long, global = true, default_value = "0xB4A11", value_parser = parse_seed)]
    seed: u64,
    /// Largest grid resolution q any operation may produce.
    #[arg(long, global = true, default_value_t = 1 << 16)]
    max_resolution: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minkowski sum A + B.
    Sum { a: PathBuf, b: PathBuf },
    /// Iterated sum k * A.
    Isum {
        a: PathBuf,
        #[arg(short)]
        k: usize,
    },
    /// delta_t(A, B) = |tA + (1-t)B| / |A| - 1.
    Delta {
        a: PathBuf,
        b: PathBuf,
        #[arg(short, value_parser = parse_scalar)]
        t: RationalScalar,
    },
    /// Convex hull of a set (cells and points).
    Hull { a: PathBuf },
    /// Positioning certificate for the hulls of X and Y.
    Position { x: PathBuf, y: PathBuf },
    /// Fiber transport between A and B.
    Transport {
        a: PathBuf,
        b: PathBuf,
        #[arg(short, value_parser = parse_scalar)]
        t: RationalScalar,
        /// Fiber direction, 1 <= axis <= d.
        #[arg(long)]
        axis: usize,
    },
    /// Run a checker on input files, or on a seeded corpus when no files are given.
    Check(CheckArgs),
    /// Exact evaluation of a sharp family.
    SharpFamily(FamilyArgs),
    /// Run a checker over a seeded corpus.
    Sweep {
        #[arg(long)]
        checker: String,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct CheckArgs {
    name: String,
    files: Vec<PathBuf>,
    #[arg(short, value_parser = parse_scalar)]
    t: Option<RationalScalar>,
    #[arg(short)]
    k: Option<usize>,
    #[arg(short)]
    m: Option<usize>,
    /// Long-fibre constant (defaults to L_{d,t}).
    #[arg(short = 'L', value_parser = parse_rat)]
    l: Option<Rational>,
    /// Hull constant for thm-iterated (defaults to the heuristic L^d at t = 1/2).
    #[arg(long, value_parser = parse_rat)]
    constant: Option<Rational>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyName {
    TwoSet,
    Iterated,
}

#[derive(Args)]
struct FamilyArgs {
    family: FamilyName,
    #[arg(short)]
    d: usize,
    #[arg(short, value_parser = parse_scalar)]
    t: Option<RationalScalar>,
    #[arg(short)]
    k: Option<usize>,
    /// Far translate, comma separated.
    #[arg(short, value_delimiter = ',', allow_hyphen_values = true, value_parser = parse_rat)]
    v: Vec<Rational>,
    /// Resolutions for the grid cross-check.
    #[arg(long, value_delimiter = ',')]
    grid_q: Vec<u64>,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    }
    .map_err(|e| e.to_string())
}

fn parse_rat(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn parse_scalar(s: &str) -> Result<RationalScalar, String> {
    let r = parse_rat(s)?;
    RationalScalar::try_from_rational(&r).map_err(|e| e.to_string())
}

/// Why a run did not succeed.
enum Failure {
    /// Exit 1.
    Counterexample(String),
    /// Exit 2.
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Run = Result<String, Failure>;

struct Ctx {
    max_cells: u128,
    max_resolution: u64,
    seed: u64,
}

impl Ctx {
    fn from_env(cli: &Cli) -> Result<Self, Failure> {
        let max_cells = match std::env::var("SUMSETLAB_MAX_CELLS") {
            Ok(v) => v.trim().parse().map_err(|_| {
                Failure::Input(format!("SUMSETLAB_MAX_CELLS must be a positive integer, got `{v}`"))
            })?,
            Err(_) => DEFAULT_MAX_CELLS,
        };
        Ok(Ctx {
            max_cells,
            max_resolution: cli.max_resolution,
            seed: cli.seed,
        })
    }

    /// Rejects a block sum whose output could exceed the working-set cap.
    fn guard(&self, a: &GridSet, b: &GridSet, sa: i64, sb: i64, side: i64, q: u64) -> Result<(), Failure> {
        if q > self.max_resolution {
            return Err(Failure::Input(format!(
                "result resolution q = {q} exceeds the cap {} (--max-resolution)",
                self.max_resolution
            )));
        }
        let d = a.dim() as u32;
        let pairs = a.len() as u128 * b.len() as u128 * (side as u128).pow(d);
        let (Some((alo, ahi)), Some((blo, bhi))) = (a.anchor_bounds(), b.anchor_bounds()) else {
            return Ok(());
        };
        let mut span: u128 = 1;
        for i in 0..a.dim() {
            let ext = (sa as i128) * (ahi[i] - alo[i]) as i128 + (sb as i128) * (bhi[i] - blo[i]) as i128 + side as i128;
            span = span.saturating_mul(ext as u128);
        }
        let estimate = pairs.min(span);
        if estimate > self.max_cells {
            return Err(Failure::Input(format!(
                "the result may hold up to {estimate} cells, over the cap of {} (SUMSETLAB_MAX_CELLS)",
                self.max_cells
            )));
        }
        Ok(())
    }
}

fn load(path: &Path) -> Result<SetDefinition, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    SetDefinition::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_grid(path: &Path) -> Result<GridSet, Failure> {
    load(path)?
        .to_grid()
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_intervals(path: &Path) -> Result<IntervalSet, Failure> {
    load(path)?
        .to_intervals()
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Either representation, chosen per file: 1D files go through exact
/// interval arithmetic (so points count), everything else through grids.
enum Loaded {
    Grid(GridSet),
    Line(IntervalSet),
}

fn load_any(path: &Path) -> Result<Loaded, Failure> {
    let def = load(path)?;
    if def.dim == 1 {
        Ok(Loaded::Line(def.to_intervals()?))
    } else {
        Ok(Loaded::Grid(
            def.to_grid().map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?,
        ))
    }
}

fn load_polytope(path: &Path) -> Result<Polytope, Failure> {
    let def = load(path)?;
    let mut pts = def.grid_part()?.corner_points();
    pts.extend(def.points());
    Ok(hull_of(def.dim, &pts)?)
}

fn files<const N: usize>(fs: &[PathBuf], what: &str) -> Result<[PathBuf; N], Failure> {
    <[PathBuf; N]>::try_from(fs.to_vec())
        .map_err(|_| Failure::Input(format!("{what} needs exactly {N} input file(s), got {}", fs.len())))
}

fn need<T: Clone>(v: &Option<T>, flag: &str, what: &str) -> Result<T, Failure> {
    v.clone()
        .ok_or_else(|| Failure::Input(format!("{what} needs {flag}")))
}

fn report_out(r: VerdictReport) -> Run {
    let text = r.to_json();
    if r.holds {
        Ok(text)
    } else {
        Err(Failure::Counterexample(text))
    }
}

fn sums(ctx: &Ctx, a: &GridSet, b: &GridSet) -> Result<GridSet, Failure> {
    let (a, b) = common_resolution(a, b)?;
    ctx.guard(&a, &b, 1, 1, 2, a.q())?;
    Ok(grid::minkowski_sum_auto(&a, &b)?)
}

fn delta(ctx: &Ctx, a: &Path, b: &Path, t: RationalScalar) -> Run {
    let (value, digest) = match (load_any(a)?, load_any(b)?) {
        (Loaded::Grid(a), Loaded::Grid(b)) => {
            let (ca, cb) = common_resolution(&a, &b)?;
            let q = grid::scaled_sum_resolution(&ca, &cb, t)?;
            ctx.guard(&ca, &cb, t.numer(), t.denom() - t.numer(), t.denom(), q)?;
            (delta_t(&a, &b, t)?, Digester::new("delta").add(&a).add(&b).add(&t).finish())
        }
        (Loaded::Line(a), Loaded::Line(b)) => {
            (delta_t(&a, &b, t)?, Digester::new("delta").add(&a).add(&b).add(&t).finish())
        }
        _ => return Err(Failure::Input("A and B must have the same dimension".into())),
    };
    let zero = Rational::from_integer(0.into());
    let holds = value >= zero;
    let tight = value == zero;
    report_out(
        VerdictReport::new("delta", digest, zero)
            .with("delta", value)
            .with("t", t.to_rational())
            .verdict(holds, tight),
    )
}

fn transport(ctx: &Ctx, a: &Path, b: &Path, t: RationalScalar, axis: usize) -> Run {
    let (a, b) = (load_grid(a)?, load_grid(b)?);
    if axis == 0 || axis > a.dim() {
        return Err(Failure::Input(format!("--axis must lie in 1..={}, got {axis}", a.dim())));
    }
    let axis = axis - 1;
    let (ca, cb) = common_resolution(&a, &b)?;
    let q = grid::scaled_sum_resolution(&ca, &cb, t)?;
    ctx.guard(&ca, &cb, t.numer(), t.denom() - t.numer(), t.denom(), q)?;
    let (fa, fb) = (decompose(&a, axis)?, decompose(&b, axis)?);
    let plan = optimal_transport(&fa.marginal(), &fb.marginal())?;
    let rho = rho_t_check(&fa, &fb, &plan, t)?;
    let contained = check_s1_containment(&a, &b, axis, &plan, t)?;
    let holds = rho.holds && contained.holds;
    let text = serde_json::to_string_pretty(&json!({
        "plan": plan,
        "rho_t": rho,
        "s1_containment": contained,
    }))
    .expect("serializes");
    if holds {
        Ok(text)
    } else {
        Err(Failure::Counterexample(text))
    }
}

fn sweep_out(checker: Checker, seed: u64, count: usize, format: Format) -> Run {
    let recs = sweep(checker, seed, count)?;
    let text = match format {
        Format::Csv => records_to_csv(&recs)?,
        Format::Json => records_to_json(&recs),
    };
    if recs.iter().all(|r| r.holds) {
        Ok(text)
    } else {
        Err(Failure::Counterexample(text))
    }
}

fn check(ctx: &Ctx, args: &CheckArgs) -> Run {
    let checker: Checker = args.name.parse()?;
    if args.files.is_empty() {
        return sweep_out(checker, ctx.seed, args.count.unwrap_or(100), args.format);
    }
    if args.count.is_some() {
        return Err(Failure::Input("--count runs a corpus and takes no input files".into()));
    }
    let name = checker.name();
    let fsx = &args.files;
    let report = match checker {
        Checker::LemmaDistinct => {
            let [x, y, z] = files::<3>(fsx, name)?;
            check_lemma_distinct(&load_intervals(&x)?, &load_intervals(&y)?, &load_intervals(&z)?)?
        }
        Checker::LemmaIterated => {
            let ys = fsx.iter().map(|p| load_intervals(p)).collect::<Result<Vec<_>, _>>()?;
            check_lemma_iterated(&ys)?
        }
        Checker::Freiman => {
            let [a] = files::<1>(fsx, name)?;
            freiman_iterated_bound(&load_intervals(&a)?, need(&args.k, "-k", name)?)?
        }
        Checker::CauchyDavenport => {
            let [x, y] = files::<2>(fsx, name)?;
            check_cauchy_davenport(&load_intervals(&x)?, &load_intervals(&y)?)?
        }
        Checker::Plunnecke => {
            let [x, y] = files::<2>(fsx, name)?;
            let m = need(&args.m, "-m", name)?;
            match (load_any(&x)?, load_any(&y)?) {
                (Loaded::Grid(x), Loaded::Grid(y)) => {
                    let (cx, cy) = common_resolution(&x, &y)?;
                    ctx.guard(&cx, &cy, 1, 1, 2, cx.q())?;
                    check_plunnecke(&x, &y, m)?
                }
                (Loaded::Line(x), Loaded::Line(y)) => check_plunnecke(&x, &y, m)?,
                _ => return Err(Failure::Input("X and Y must have the same dimension".into())),
            }
        }
        Checker::ThmDistinct => {
            let [a, b] = files::<2>(fsx, name)?;
            let t = need(&args.t, "-t", name)?;
            match (load_any(&a)?, load_any(&b)?) {
                (Loaded::Grid(a), Loaded::Grid(b)) => {
                    let (ca, cb) = common_resolution(&a, &b)?;
                    let q = grid::scaled_sum_resolution(&ca, &cb, t)?;
                    ctx.guard(&ca, &cb, t.numer(), t.denom() - t.numer(), t.denom(), q)?;
                    check_thm_distinct(&a, &b, t)?
                }
                (Loaded::Line(a), Loaded::Line(b)) => check_thm_distinct(&a, &b, t)?,
                _ => return Err(Failure::Input("A and B must have the same dimension".into())),
            }
        }
        Checker::ThmIterated => {
            let [a] = files::<1>(fsx, name)?;
            let k = need(&args.k, "-k", name)?;
            match load_any(&a)? {
                Loaded::Grid(a) => {
                    ctx.guard(&a, &a, k as i64 - 1, 1, 2, a.q())?;
                    check_thm_iterated(&a, k, args.constant.clone())?
                }
                Loaded::Line(a) => check_thm_iterated(&a, k, args.constant.clone())?,
            }
        }
        Checker::LongFibre => {
            let [a, b] = files::<2>(fsx, name)?;
            let t = need(&args.t, "-t", name)?;
            let (a, b) = (load_grid(&a)?, load_grid(&b)?);
            let l = args.l.clone().unwrap_or_else(|| constant_l(a.dim(), t));
            check_long_fibre_claim(&a, &b, t, &l)?
        }
        Checker::SharpTwoSet | Checker::SharpIterated => {
            return Err(Failure::Input("use the sharp-family subcommand for sharp families".into()))
        }
    };
    report_out(report)
}

fn sharp(args: &FamilyArgs) -> Run {
    let kind = match args.family {
        FamilyName::TwoSet => FamilyKind::TwoSet(need(&args.t, "-t", "two-set")?),
        FamilyName::Iterated => FamilyKind::Iterated(need(&args.k, "-k", "iterated")?),
    };
    let fam = SharpFamily {
        d: args.d,
        kind,
        v: args.v.clone(),
    };
    report_out(sharp_family_exact(&fam, &args.grid_q)?)
}

fn run(cli: &Cli) -> Run {
    let ctx = Ctx::from_env(cli)?;
    match &cli.command {
        Command::Sum { a, b } => {
            let s = sums(&ctx, &load_grid(a)?, &load_grid(b)?)?;
            Ok(SetDefinition::from_grid(&s).to_json())
        }
        Command::Isum { a, k } => {
            if *k == 0 {
                return Err(Failure::Input("-k must be at least 1".into()));
            }
            let a = load_grid(a)?;
            let mut acc = a.clone();
            for _ in 1..*k {
                acc = sums(&ctx, &acc, &a)?;
            }
            Ok(SetDefinition::from_grid(&acc).to_json())
        }
        Command::Delta { a, b, t } => delta(&ctx, a, b, *t),
        Command::Hull { a } => {
            let p = load_polytope(a)?;
            let mut v = serde_json::to_value(&p).expect("serializes");
            v["volume"] = json!(format_rational(&p.volume()));
            Ok(serde_json::to_string_pretty(&v).expect("serializes"))
        }
        Command::Position { x, y } => {
            let pos = position(&load_polytope(x)?, &load_polytope(y)?)?;
            let text = serde_json::to_string_pretty(&pos).expect("serializes");
            if verify_certificate(&pos.certificate)?.holds {
                Ok(text)
            } else {
                Err(Failure::Counterexample(text))
            }
        }
        Command::Transport { a, b, t, axis } => transport(&ctx, a, b, *t, *axis),
        Command::Check(args) => check(&ctx, args),
        Command::SharpFamily(args) => sharp(args),
        Command::Sweep {
            checker,
            count,
            format,
        } => sweep_out(checker.parse()?, ctx.seed, *count, *format),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), String> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &cli.output {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (text, code) = match run(&cli) {
        Ok(text) => (text, 0),
        Err(Failure::Counterexample(text)) => {
            eprintln!("sumsetlab: counterexample reported");
            (text, 1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("sumsetlab: {msg}");
            return ExitCode::from(2);
        }
    };
    if let Err(msg) = emit(&cli, &text) {
        eprintln!("sumsetlab: {msg}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}

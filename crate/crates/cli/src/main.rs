use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use flate2::read::GzDecoder;

use afp_core::bench::experiment::{read_events, read_results, InstanceEntry, Manifest, RunOptions, Variant};
use afp_core::bench::metrics::compare_gaps;
use afp_core::bench::plot::{render_svg, PlotKind};
use afp_core::bench::{run_experiment, write_outputs};
use afp_core::engine::SolverConfig;
use afp_core::fixtures;
use afp_core::model::MipInstance;
use afp_core::moves::MoveKind;
use afp_core::mps::{dump_canonical, parse_mps};
use afp_core::projection::QualityNorm;

#[derive(Parser)]
#[command(name = "afp", version, about = "Feasibility pump heuristics for mixed-integer programs")]
struct Cli {
    /// Worker threads for batch runs.
    #[arg(long, global = true, env = "AFP_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one instance and print the best solution.
    Solve(SolveArgs),
    /// Run a batch experiment and write result tables.
    Run(RunArgs),
    /// Count instances with strictly lower gaps in two result tables.
    Compare {
        left: PathBuf,
        right: PathBuf,
    },
    /// Render SVG diagnostics from an event log.
    Plot(PlotArgs),
    /// Parse an MPS file and print it in canonical form.
    Dump { instance: String },
    /// Write the bundled fixtures as MPS files plus a manifest.
    Fixtures {
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Coeff,
    Relaxed,
}

#[derive(Args, Default)]
struct SolverArgs {
    /// Global iteration budget.
    #[arg(long)]
    n_t: Option<usize>,
    /// Iterations per run.
    #[arg(long)]
    n_r: Option<usize>,
    /// Stagnation limit.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long)]
    alpha_decay: Option<f64>,
    #[arg(long)]
    p_h: Option<f64>,
    #[arg(long)]
    alpha_h: Option<f64>,
    #[arg(long, value_enum)]
    quality_norm: Option<NormArg>,
    /// Comma-separated move list, e.g. `rr,wpd,spd`.
    #[arg(long, value_delimiter = ',')]
    moves: Option<Vec<MoveKind>>,
    /// Keep the acceptance normaliser at 1.
    #[arg(long)]
    no_normalize: bool,
    /// Seconds per solve.
    #[arg(long)]
    time_limit: Option<f64>,
}

impl SolverArgs {
    fn apply(&self, cfg: &mut SolverConfig) {
        if let Some(v) = self.n_t {
            cfg.budget.n_t = v;
        }
        if let Some(v) = self.n_r {
            cfg.budget.n_r = v;
        }
        if let Some(v) = self.k {
            cfg.budget.k = v;
        }
        if let Some(v) = self.alpha0 {
            cfg.alpha0 = v;
        }
        if let Some(v) = self.alpha_decay {
            cfg.alpha_decay = v;
        }
        if let Some(v) = self.p_h {
            cfg.p_h = v;
        }
        if let Some(v) = self.alpha_h {
            cfg.alpha_h = v;
        }
        if let Some(n) = self.quality_norm {
            cfg.quality_norm = match n {
                NormArg::Coeff => QualityNorm::CoeffNorm,
                NormArg::Relaxed => QualityNorm::RelaxedOptimum,
            };
        }
        if let Some(m) = &self.moves {
            cfg.move_list = m.clone();
        }
        if self.no_normalize {
            cfg.normalize_delta = false;
        }
        if self.time_limit.is_some() {
            cfg.time_limit = self.time_limit;
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// MPS file (optionally gzipped) or `fixture:NAME`.
    instance: String,
    #[arg(long, default_value = "afp-2")]
    variant: Variant,
    /// Seeds as `1,2,3` or a half-open range `0..10`.
    #[arg(long, default_value = "1")]
    seeds: String,
    #[command(flatten)]
    solver: SolverArgs,
    /// Print the full solve reports as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Instance files or directories; ignored with `--manifest`.
    instances: Vec<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Comma-separated variants such as `afp-2,fp-1`.
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<Variant>>,
    #[arg(long)]
    seeds: Option<String>,
    /// Reference objectives, one `name value` per line.
    #[arg(long)]
    references: Option<PathBuf>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Write per-iteration event logs.
    #[arg(long)]
    events: bool,
    /// Run jobs on the calling thread only.
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotArg {
    Distance,
    Anneal,
    Both,
}

#[derive(Args)]
struct PlotArgs {
    /// JSONL event log written by `afp run --events`.
    events: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Run to draw; all runs of the seed are drawn when omitted.
    #[arg(long)]
    run: Option<usize>,
    #[arg(long, value_enum, default_value = "both")]
    kind: PlotArg,
    #[arg(long, default_value = "plots")]
    out: PathBuf,
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().context("seed range start")?;
        let b: u64 = b.trim().parse().context("seed range end")?;
        return Ok((a..b).collect());
    }
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<u64>().with_context(|| format!("bad seed `{t}`")))
        .collect()
}

fn load_instance(path: &Path) -> Result<MipInstance, String> {
    let f = fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let reader: Box<dyn BufRead> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(BufReader::new(GzDecoder::new(f)))
    } else {
        Box::new(BufReader::new(f))
    };
    parse_mps(reader).map_err(|e| format!("{}: {e}", path.display()))
}

fn resolve(arg: &str) -> Result<MipInstance> {
    if let Some(name) = arg.strip_prefix("fixture:") {
        return fixtures::by_name(name)
            .map(|f| f.instance)
            .with_context(|| format!("unknown fixture `{name}`"));
    }
    load_instance(Path::new(arg)).map_err(anyhow::Error::msg)
}

fn is_mps(p: &Path) -> bool {
    let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("").to_ascii_lowercase();
    name.ends_with(".mps") || name.ends_with(".mps.gz")
}

fn expand(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| is_mps(p))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn solve(args: &SolveArgs) -> Result<ExitCode> {
    let inst = resolve(&args.instance)?;
    let mut cfg = SolverConfig::default();
    args.solver.apply(&mut cfg);
    let mut any = false;
    for seed in parse_seeds(&args.seeds)? {
        let rep = args.variant.solve(&inst, &cfg, seed);
        any |= rep.feasible();
        if args.json {
            println!("{}", serde_json::to_string(&rep)?);
            continue;
        }
        match &rep.best {
            Some(b) => println!(
                "{} {} seed {seed}: feasible, objective {}, {} runs, {} iterations, {:.3}s",
                inst.name(),
                args.variant,
                b.objective,
                rep.runs.len(),
                rep.iterations,
                rep.seconds
            ),
            None => println!(
                "{} {} seed {seed}: no solution ({:?} relaxation), {} runs, {} iterations, {:.3}s",
                inst.name(),
                args.variant,
                rep.relaxation,
                rep.runs.len(),
                rep.iterations,
                rep.seconds
            ),
        }
    }
    Ok(if any { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run(args: &RunArgs) -> Result<ExitCode> {
    let (mut manifest, base) = match &args.manifest {
        Some(m) => {
            let base = m.parent().map(Path::to_path_buf).unwrap_or_default();
            (Manifest::load(m)?, base)
        }
        None => {
            if args.instances.is_empty() {
                bail!("give instance files or --manifest");
            }
            let instances = expand(&args.instances)?.into_iter().map(InstanceEntry::file).collect();
            let m = Manifest {
                seeds: vec![1],
                variants: vec![Variant::AFP2],
                references: None,
                solver: SolverConfig::default(),
                instances,
            };
            (m, PathBuf::new())
        }
    };
    if let Some(s) = &args.seeds {
        manifest.seeds = parse_seeds(s)?;
    }
    if let Some(v) = &args.variants {
        manifest.variants = v.clone();
    }
    if let Some(r) = &args.references {
        manifest.references = Some(std::path::absolute(r)?);
    }
    args.solver.apply(&mut manifest.solver);
    let opts = RunOptions {
        parallel: !args.sequential,
        record_events: args.events,
    };
    let res = run_experiment(&manifest, &base, &load_instance, opts)?;
    write_outputs(&res, &args.out)?;
    for r in &res.rows {
        let gap = r.gap.map_or("n/a".to_string(), |g| format!("{g:.2}%"));
        println!(
            "{:<24} {:<6} success {:.2} ({}/{}) runs {}/{} gap {}",
            r.instance, r.variant, r.success, r.feasible_seeds, r.seeds, r.successful_runs, r.runs, gap
        );
    }
    for (i, e) in &res.errors {
        eprintln!("{i}: {e}");
    }
    println!("results written to {}", args.out.display());
    Ok(if res.all_executed() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn compare(left: &Path, right: &Path) -> Result<ExitCode> {
    let l = read_results(left)?;
    let r = read_results(right)?;
    println!("{:<12} {:>9} {:>10} {:>11} {:>6}", "class", "instances", "left lower", "right lower", "ties");
    for c in compare_gaps(&l, &r) {
        println!(
            "{:<12} {:>9} {:>10} {:>11} {:>6}",
            c.class, c.instances, c.left_lower, c.right_lower, c.ties
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn plot(args: &PlotArgs) -> Result<ExitCode> {
    let mut text = String::new();
    fs::File::open(&args.events)
        .with_context(|| args.events.display().to_string())?
        .read_to_string(&mut text)?;
    let events = read_events(&text)?;
    let seed = match args.seed {
        Some(s) => s,
        None => events.first().map(|(s, _)| *s).context("event log is empty")?,
    };
    let stem = args
        .events
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("events")
        .to_string();
    fs::create_dir_all(&args.out)?;
    let mut runs: Vec<usize> = events.iter().filter(|(s, _)| *s == seed).map(|(_, e)| e.run).collect();
    runs.dedup();
    if let Some(r) = args.run {
        runs.retain(|&x| x == r);
    }
    if runs.is_empty() {
        bail!("no events for seed {seed}");
    }
    let kinds: &[(PlotKind, &str)] = match args.kind {
        PlotArg::Distance => &[(PlotKind::DistanceQuality, "distance")],
        PlotArg::Anneal => &[(PlotKind::Anneal, "anneal")],
        PlotArg::Both => &[(PlotKind::DistanceQuality, "distance"), (PlotKind::Anneal, "anneal")],
    };
    for run in runs {
        let evs: Vec<_> = events
            .iter()
            .filter(|(s, e)| *s == seed && e.run == run)
            .map(|(_, e)| e.clone())
            .collect();
        for (kind, tag) in kinds {
            let path = args.out.join(format!("{stem}_s{seed}_r{run}_{tag}.svg"));
            fs::write(&path, render_svg(&evs, *kind, &format!("{stem} seed {seed} run {run}")))?;
            println!("{}", path.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write_fixtures(out: &Path) -> Result<ExitCode> {
    fs::create_dir_all(out)?;
    let mut manifest = String::from("seeds = [1, 2, 3, 4, 5]\nvariants = [\"afp-2\", \"fp-1\"]\n");
    for f in fixtures::suite() {
        let name = f.instance.name().to_string();
        fs::write(out.join(format!("{name}.mps")), dump_canonical(&f.instance))?;
        manifest.push_str(&format!("\n[[instance]]\npath = \"{name}.mps\"\n"));
    }
    fs::write(out.join("manifest.toml"), manifest)?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    init_threads(cli.threads)?;
    match &cli.cmd {
        Cmd::Solve(a) => solve(a),
        Cmd::Run(a) => run(a),
        Cmd::Compare { left, right } => compare(left, right),
        Cmd::Plot(a) => plot(a),
        Cmd::Dump { instance } => {
            print!("{}", dump_canonical(&resolve(instance)?));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Fixtures { out } => write_fixtures(out),
    }
}

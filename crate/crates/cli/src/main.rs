use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use nvtrace::analysis::{optimize, sweep, FreeParam, Objective, OptimizeSpec, SweepSpec};
use nvtrace::config::{parse_config_with, split_override, SceneConfig};
use nvtrace::report::{cdf_svg, histogram_csv, sweep_csv, sweep_svg, Summary};
use nvtrace::scene::validate_with;
use nvtrace::tracer::run;

#[derive(Parser)]
#[command(name = "nvtrace", version, about = "Monte Carlo collection-efficiency tracer for diamond optics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace a scene and write summary.json, histogram.csv and cdf.svg.
    Trace {
        scene: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Trace once per value of one parameter and write sweep.csv and sweep.svg.
    Sweep {
        scene: PathBuf,
        /// Dotted scene-file key, or a bare assembly or lens field.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', conflicts_with = "range")]
        values: Vec<f64>,
        /// Evenly spaced values as start:stop:count.
        #[arg(long)]
        range: Option<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Maximize an objective over up to four parameters and write optimum.json.
    Optimize {
        scene: PathBuf,
        #[arg(long, value_enum, default_value = "back-collected")]
        objective: ObjectiveArg,
        /// Free parameter as name=lower:upper (repeatable).
        #[arg(long = "free", required = true)]
        free: Vec<String>,
        /// Maximum objective evaluations.
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Rebuild histogram.csv and cdf.svg from a summary.json.
    Report {
        summary: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a scene for gaps, flipped faces and no-op interfaces.
    Validate {
        scene: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = nvtrace::scene::DEFAULT_PROBES)]
        probes: usize,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ObjectiveArg {
    BackCollected,
    Ratio,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    /// Rays per emitter (total rays for a cylinder source).
    #[arg(long)]
    rays: Option<u32>,
    /// Override any scene-file key, e.g. --set assembly.anvil_height=2.5
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Credit each emitted ray to its strongest leaf instead of splitting power.
    #[arg(long)]
    counted_rays: bool,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Input(anyhow::Error),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

fn input<T, E: Into<anyhow::Error>>(r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Input(e.into()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Trace { scene, run: args } => trace(&scene, &args),
        Command::Sweep { scene, param, values, range, run: args } => {
            let values = match range {
                Some(r) => input(parse_range(&r))?,
                None => values,
            };
            if values.is_empty() {
                return Err(Failure::Input(anyhow!("give --values or --range")));
            }
            let cfg = load(&scene, &args)?;
            let spec = SweepSpec { parameter: param.clone(), values };
            let rows = sweep(&cfg, &spec).map_err(|e| Failure::Input(e.into()))?;
            create_out(&args.out)?;
            write(&args.out, "sweep.csv", &sweep_csv(&param, &rows))?;
            write(&args.out, "sweep.svg", &sweep_svg(&param, &rows))?;
            println!("{:>14} {:>10} {:>12} {:>12}", param, "ratio", "back", "front");
            for r in &rows {
                match (&r.metrics, &r.error) {
                    (Some(m), _) => println!(
                        "{:>14} {:>10} {:>12.6} {:>12.6}",
                        r.value,
                        m.ratio.map_or("unbounded".into(), |x| format!("{x:.4}")),
                        m.back_collected,
                        m.front_collected
                    ),
                    (None, Some(e)) => println!("{:>14} failed: {e}", r.value),
                    (None, None) => {}
                }
            }
            Ok(())
        }
        Command::Optimize { scene, objective, free, budget, run: args } => {
            let cfg = load(&scene, &args)?;
            let params = input(free.iter().map(|f| parse_free(f)).collect::<anyhow::Result<Vec<_>>>())?;
            let spec = OptimizeSpec {
                objective: match objective {
                    ObjectiveArg::BackCollected => Objective::BackCollected,
                    ObjectiveArg::Ratio => Objective::Ratio,
                },
                params,
                budget,
                start: None,
            };
            let report = optimize(&cfg, &spec).map_err(|e| match e {
                nvtrace::analysis::AnalysisError::BadParameter(..)
                | nvtrace::analysis::AnalysisError::BadBounds { .. }
                | nvtrace::analysis::AnalysisError::ParameterCount(_) => Failure::Input(e.into()),
                other => Failure::Runtime(other.into()),
            })?;
            create_out(&args.out)?;
            write(&args.out, "optimum.json", &(serde_json::to_string_pretty(&report)? + "\n"))?;
            for (n, v) in report.param_names.iter().zip(&report.best_params) {
                println!("{n} = {v:.6}");
            }
            println!(
                "objective = {:.6} after {} evaluations ({})",
                report.best_objective,
                report.evaluations,
                if report.converged { "converged" } else { "budget exhausted" }
            );
            Ok(())
        }
        Command::Report { summary, out } => {
            let text = input(fs::read_to_string(&summary).with_context(|| format!("reading {}", summary.display())))?;
            let s: Summary =
                input(serde_json::from_str(&text).with_context(|| format!("parsing {}", summary.display())))?;
            create_out(&out)?;
            write(&out, "histogram.csv", &histogram_csv(&s.tally))?;
            write(&out, "cdf.svg", &cdf_svg(&s.tally))?;
            print!("{}", s.text());
            Ok(())
        }
        Command::Validate { scene, seed, probes } => {
            let text = input(fs::read_to_string(&scene).with_context(|| format!("reading {}", scene.display())))?;
            let cfg = input(parse_config_with(&text, &[]).with_context(|| scene.display().to_string()))?;
            let built = input(cfg.build_scene())?;
            let report = validate_with(&built, probes, seed);
            if report.passed {
                println!("{}: ok ({} surfaces, {} probes)", scene.display(), built.surfaces().len(), probes);
                return Ok(());
            }
            for (f, n) in &report.failures {
                println!("{f} [{n} probes]");
            }
            Err(Failure::Input(anyhow!(
                "{} failed validation; offending surfaces: {}",
                scene.display(),
                report.offending_surfaces().join(", ")
            )))
        }
    }
}

fn trace(scene: &Path, args: &RunArgs) -> Result<(), Failure> {
    let cfg = load(scene, args)?;
    let resolved = input(cfg.resolve())?;
    let report = run(&resolved.scene, &resolved.source, &resolved.detectors, &resolved.limits, resolved.options)?;
    let summary = Summary::new(&report, &cfg, resolved.scene.assembly());
    create_out(&args.out)?;
    write(&args.out, "summary.json", &summary.to_json())?;
    write(&args.out, "histogram.csv", &histogram_csv(&report.tally))?;
    write(&args.out, "cdf.svg", &cdf_svg(&report.tally))?;
    print!("{}", summary.text());
    Ok(())
}

/// Read a scene file and fold in `--set` and the shortcut flags.
fn load(path: &Path, args: &RunArgs) -> Result<SceneConfig, Failure> {
    let text = input(fs::read_to_string(path).with_context(|| format!("reading {}", path.display())))?;
    let overrides = input(args.set.iter().map(|s| split_override(s)).collect::<Result<Vec<_>, _>>())?;
    let mut cfg = input(parse_config_with(&text, &overrides).with_context(|| path.display().to_string()))?;
    if let Some(seed) = args.seed {
        cfg.tracer.seed = seed;
    }
    if let Some(w) = args.workers {
        cfg.tracer.workers = w;
    }
    if let Some(r) = args.rays {
        if r == 0 {
            return Err(Failure::Input(anyhow!("--rays must be positive")));
        }
        cfg.sources = cfg.sources.with_rays(r);
    }
    if args.counted_rays {
        cfg.tracer.counted_rays = true;
    }
    Ok(cfg)
}

fn parse_range(s: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else { bail!("range must be start:stop:count, got `{s}`") };
    let (a, b): (f64, f64) = (a.trim().parse()?, b.trim().parse()?);
    let n: usize = n.trim().parse()?;
    match n {
        0 => bail!("range count must be positive"),
        1 => Ok(vec![a]),
        _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
    }
}

fn parse_free(s: &str) -> anyhow::Result<FreeParam> {
    let (name, bounds) = s.split_once('=').ok_or_else(|| anyhow!("expected name=lower:upper, got `{s}`"))?;
    let (lo, hi) = bounds.split_once(':').ok_or_else(|| anyhow!("expected name=lower:upper, got `{s}`"))?;
    Ok(FreeParam { name: name.trim().to_string(), lower: lo.trim().parse()?, upper: hi.trim().parse()? })
}

fn create_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

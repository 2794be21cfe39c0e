//! Command-line front end behind the `treeval` binary.
//!
//! Exit codes: 0 success, 1 usage error, 2 evaluation or data error.

pub mod batch;
pub mod config;
pub mod tables;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::metrics::{evaluate_case, CaseMetrics};
use crate::phantom::{degrade, generate, Degradation, PhantomSpec};
use crate::ranking::{kendall_tau, rank, KendallTau, Leaderboard};
use crate::topology::centerline;
use crate::volume::{case_stem, load_mask, save_mask, Spacing};

use config::{ConfigFile, Overrides, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] Error),
    #[error("{context}: {source}")]
    Case { context: String, source: Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) | CliError::Case { .. } => EXIT_DATA,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "treeval", version, about = "Evaluate tree-structured segmentation masks")]
pub struct Cli {
    /// TOML config file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct EvalFlags {
    /// Voxels with value > threshold are foreground.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Prune centerline spurs shorter than this (mm); 0 keeps all.
    #[arg(long)]
    pub min_branch_mm: Option<f64>,
    /// `reference` (default) or `prediction`.
    #[arg(long)]
    pub coverage_direction: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one prediction against one ground truth.
    Eval {
        pred: PathBuf,
        gt: PathBuf,
        #[command(flatten)]
        eval: EvalFlags,
        /// Also write the full metrics as JSON (`-` for stdout).
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Evaluate every case in a prediction/ground-truth directory pair.
    Batch {
        #[arg(long)]
        pred: Option<PathBuf>,
        #[arg(long)]
        gt: Option<PathBuf>,
        /// CSV with columns case_id,pred,gt instead of stem matching.
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Output directory for results.csv and manifest.json.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(short, long)]
        jobs: Option<usize>,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        no_cache: bool,
        #[command(flatten)]
        eval: EvalFlags,
    },
    /// Aggregate per-team results into a ranked leaderboard.
    Leaderboard {
        /// Results CSVs, directories of per-team CSVs, or team result directories.
        inputs: Vec<PathBuf>,
        /// Read published team means (team,TD,BD,DSC,Precision,...) instead of cases.
        #[arg(long, conflicts_with = "inputs")]
        summary: Option<PathBuf>,
        /// Output directory for board.csv and board.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// `mean`, `weighted`, or four weights `td,bd,dsc,precision`.
        #[arg(long)]
        weights: Option<String>,
        #[arg(long, overrides_with = "no_normalize")]
        normalize: bool,
        #[arg(long)]
        no_normalize: bool,
        /// Write per-team metric arrays as JSON for plotting.
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
    /// Kendall's tau between two leaderboards.
    RankStability {
        board_a: PathBuf,
        board_b: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Generate synthetic tube-tree phantoms with exact truth.
    Phantom(PhantomArgs),
    /// Write the centerline of a mask and describe its branches.
    Skeletonize {
        mask: PathBuf,
        /// Centerline mask output (.nii, .nii.gz or .tbm).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Branch list output as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        min_branch_mm: f64,
    },
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub depth: u32,
    #[arg(long, default_value_t = 2.5)]
    pub root_radius: f64,
    #[arg(long, default_value_t = 0.8)]
    pub radius_decay: f64,
    /// Centerline voxels per generation, comma separated.
    #[arg(long, default_value = "28,20,15,12,10")]
    pub lengths: String,
    #[arg(long, default_value_t = 90.0)]
    pub angle: f64,
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    /// Voxel spacing in mm as dx,dy,dz.
    #[arg(long, default_value = "1,1,1")]
    pub spacing: String,
    /// Grid size as nx,ny,nz; fitted to the tree when omitted.
    #[arg(long)]
    pub dims: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub margin: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of phantoms; each uses seed + index.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value = "phantom")]
    pub name: String,
    /// File extension: nii.gz, nii or tbm.
    #[arg(long, default_value = "nii.gz")]
    pub format: String,
    /// Also write a prediction: identity, dilate, erase:<branch>,
    /// break:<branch>:<gap> or noise:<voxels>.
    #[arg(long)]
    pub degrade: Option<String>,
}

/// Parses `args` and runs the selected command, returning the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<i32, CliError> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Eval { pred, gt, eval, json } => cmd_eval(&pred, &gt, eval, json.as_deref(), file),
        Command::Batch {
            pred,
            gt,
            pairs,
            out,
            jobs,
            cache_dir,
            no_cache,
            eval,
        } => {
            let flags = Overrides {
                pred,
                gt,
                pairs,
                out,
                cache_dir,
                no_cache,
                jobs,
                ..eval_overrides(eval)
            };
            cmd_batch(RunConfig::resolve(flags, file)?)
        }
        Command::Leaderboard {
            inputs,
            summary,
            out,
            weights,
            normalize,
            no_normalize,
            plot_data,
        } => {
            let flags = Overrides {
                out,
                weights,
                normalize: if normalize {
                    Some(true)
                } else if no_normalize {
                    Some(false)
                } else {
                    None
                },
                no_cache: true,
                ..Overrides::default()
            };
            let cfg = RunConfig::resolve(flags, file)?;
            cmd_leaderboard(&inputs, summary.as_deref(), plot_data.as_deref(), &cfg)
        }
        Command::RankStability { board_a, board_b, json } => cmd_rank_stability(&board_a, &board_b, json),
        Command::Phantom(args) => cmd_phantom(&args),
        Command::Skeletonize {
            mask,
            out,
            json,
            threshold,
            min_branch_mm,
        } => cmd_skeletonize(&mask, out.as_deref(), json.as_deref(), threshold, min_branch_mm, file),
    }
}

fn eval_overrides(e: EvalFlags) -> Overrides {
    Overrides {
        threshold: e.threshold,
        min_branch_mm: e.min_branch_mm,
        coverage_direction: e.coverage_direction,
        ..Overrides::default()
    }
}

/// Fixed-width metric table with three decimals.
pub fn metrics_table(rows: &[CaseMetrics]) -> String {
    let width = rows.iter().map(|r| r.case_id.len()).max().unwrap_or(4).max(4);
    let mut s = format!("{:<width$}", "case");
    for name in tables::METRIC_NAMES {
        s += &format!(" {name:>9}");
    }
    s.push('\n');
    for r in rows {
        s += &format!("{:<width$}", r.case_id);
        for v in r.values() {
            s += &format!(" {v:>9.3}");
        }
        s.push('\n');
    }
    s
}

fn cmd_eval(pred: &Path, gt: &Path, flags: EvalFlags, json: Option<&Path>, file: ConfigFile) -> Result<i32, CliError> {
    let cfg = RunConfig::resolve(
        Overrides {
            no_cache: true,
            ..eval_overrides(flags)
        },
        file,
    )?;
    let p = load_named(pred, cfg.threshold)?;
    let g = load_named(gt, cfg.threshold)?;
    let case_id = case_stem(gt).unwrap_or_else(|| "case".into());
    let m = evaluate_case(&case_id, &p, &g, &cfg.eval_options(), None).map_err(|source| CliError::Case {
        context: format!("{} vs {}", pred.display(), gt.display()),
        source,
    })?;
    print!("{}", metrics_table(std::slice::from_ref(&m)));
    for w in &m.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = json {
        let text = serde_json::to_string_pretty(&m).map_err(Error::from)? + "\n";
        if path == Path::new("-") {
            print!("{text}");
        } else {
            tables::write_bytes(path, text.as_bytes())?;
        }
    }
    Ok(EXIT_OK)
}

/// Loads a mask, naming the file in any error that does not already.
fn load_named(path: &Path, threshold: f64) -> Result<crate::volume::VoxelMask, CliError> {
    load_mask(path, threshold).map_err(|source| match source {
        Error::Io { .. } => CliError::Data(source),
        _ => CliError::Case {
            context: path.display().to_string(),
            source,
        },
    })
}

fn cmd_batch(cfg: RunConfig) -> Result<i32, CliError> {
    let pairs = match (&cfg.pairs, &cfg.pred, &cfg.gt) {
        (Some(table), _, _) => batch::read_pairs(table)?,
        (None, Some(p), Some(g)) => batch::pair_by_stem(p, g)?,
        _ => return Err(CliError::Usage("batch needs --pred and --gt, or --pairs".into())),
    };
    log::info!("{} cases on {} workers", pairs.len(), cfg.jobs);
    let out = batch::run_batch(&pairs, &cfg)?;
    batch::write_outputs(&cfg.out, &out)?;
    let m = &out.manifest;
    println!(
        "{} cases: {} ok, {} error -> {}",
        m.n_cases,
        m.n_ok,
        m.n_error,
        cfg.out.join("results.csv").display()
    );
    Ok(if m.n_error == 0 { EXIT_OK } else { EXIT_DATA })
}

fn board_text(board: &Leaderboard) -> String {
    let width = board.entries.iter().map(|e| e.team_id.len()).max().unwrap_or(4).max(4);
    let mut s = format!("{:>4}  {:<width$} {:>9}\n", "rank", "team", "score");
    for e in &board.entries {
        s += &format!("{:>4}  {:<width$} {:>9.3}\n", e.rank, e.team_id, e.score);
    }
    s
}

fn cmd_leaderboard(
    inputs: &[PathBuf],
    summary: Option<&Path>,
    plot_data: Option<&Path>,
    cfg: &RunConfig,
) -> Result<i32, CliError> {
    let preset = cfg.weight_preset();
    let (teams, cases) = match summary {
        Some(path) => {
            if plot_data.is_some() {
                return Err(CliError::Usage("--plot-data needs per-case results, not --summary".into()));
            }
            (tables::read_summary(path)?, None)
        }
        None => {
            if inputs.is_empty() {
                return Err(CliError::Usage("leaderboard needs result inputs or --summary".into()));
            }
            let refs: Vec<&Path> = inputs.iter().map(|p| p.as_path()).collect();
            let cases = tables::team_cases(&refs)?;
            (tables::aggregate_all(&cases), Some(cases))
        }
    };
    let board = rank(&teams, &preset.weights, cfg.normalize)?;
    for t in &board.unranked {
        eprintln!("warning: team {t} has no valid cases and is not ranked");
    }
    tables::write_bytes(&cfg.out.join("board.csv"), &tables::board_csv(&board)?)?;
    let json = serde_json::to_string_pretty(&board).map_err(Error::from)? + "\n";
    tables::write_bytes(&cfg.out.join("board.json"), json.as_bytes())?;
    if let (Some(path), Some(cases)) = (plot_data, cases.as_ref()) {
        let text = serde_json::to_string_pretty(&tables::plot_data(&board, cases)).map_err(Error::from)? + "\n";
        tables::write_bytes(path, text.as_bytes())?;
    }
    print!("{}", board_text(&board));
    Ok(EXIT_OK)
}

/// Three significant figures in plain notation, e.g. 0.600 or -1.00.
pub fn sig3(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.2}");
    }
    let decimals = (2 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn tau_report(k: &KendallTau) -> String {
    format!(
        "teams       {}\ntau         {}\np-value     {:.2e}\nconcordant  {}\ndiscordant  {}\n",
        k.n,
        sig3(k.tau),
        k.p_value,
        k.concordant,
        k.discordant
    )
}

fn cmd_rank_stability(a: &Path, b: &Path, json: bool) -> Result<i32, CliError> {
    let k = kendall_tau(&tables::read_board(a)?, &tables::read_board(b)?)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&k).map_err(Error::from)?);
    } else {
        print!("{}", tau_report(&k));
    }
    Ok(EXIT_OK)
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|p| p.trim().parse::<T>())
        .collect::<Result<Vec<T>, _>>()
        .map_err(|_| CliError::Usage(format!("cannot parse {what} `{s}`")))
}

fn parse3<T: std::str::FromStr + Copy>(s: &str, what: &str) -> Result<[T; 3], CliError> {
    let v = parse_list::<T>(s, what)?;
    <[T; 3]>::try_from(v).map_err(|_| CliError::Usage(format!("{what} needs three values, got `{s}`")))
}

/// Parses a `--degrade` argument. `None` means an unchanged copy.
pub fn parse_degradation(s: &str, seed: u64) -> Result<Option<Degradation>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> Result<usize, CliError> {
        parts
            .get(i)
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| CliError::Usage(format!("bad degradation `{s}`")))
    };
    Ok(Some(match parts[0] {
        "identity" => return Ok(None),
        "dilate" => Degradation::Dilate,
        "erase" => Degradation::EraseSubtree { branch: num(1)? },
        "break" => Degradation::BreakBranch {
            branch: num(1)?,
            gap: num(2)?,
        },
        "noise" => Degradation::NoiseBlob { size: num(1)?, seed },
        _ => return Err(CliError::Usage(format!("unknown degradation `{s}`"))),
    }))
}

fn cmd_phantom(a: &PhantomArgs) -> Result<i32, CliError> {
    if !["nii.gz", "nii", "tbm"].contains(&a.format.as_str()) {
        return Err(CliError::Usage(format!("unknown format `{}`", a.format)));
    }
    if a.count == 0 {
        return Err(CliError::Usage("count must be at least 1".into()));
    }
    let [dx, dy, dz] = parse3::<f64>(&a.spacing, "spacing")?;
    let base = PhantomSpec {
        depth: a.depth,
        root_radius_vox: a.root_radius,
        radius_decay: a.radius_decay,
        segment_length_vox: parse_list(&a.lengths, "lengths")?,
        branching_angle_deg: a.angle,
        length_jitter: a.jitter,
        dims: [1, 1, 1],
        spacing: Spacing::new(dx, dy, dz)?,
        rng_seed: a.seed,
    };
    let dirs = ["gt", "truth"].iter().chain(a.degrade.iter().map(|_| &"pred"));
    for d in dirs {
        fs::create_dir_all(a.out.join(d)).map_err(|e| Error::io(a.out.join(d), e))?;
    }
    for i in 0..a.count {
        let mut spec = PhantomSpec {
            rng_seed: a.seed + i as u64,
            ..base.clone()
        };
        spec = match &a.dims {
            Some(d) => PhantomSpec {
                dims: parse3(d, "dims")?,
                ..spec
            },
            None => spec.fitted(a.margin)?,
        };
        let truth = generate(&spec)?;
        let name = if a.count == 1 {
            a.name.clone()
        } else {
            format!("{}_{i:03}", a.name)
        };
        let file = format!("{name}.{}", a.format);
        save_mask(&a.out.join("gt").join(&file), &truth.mask)?;
        truth.write_truth(&a.out.join("truth").join(format!("{name}.json")))?;
        if let Some(d) = &a.degrade {
            let pred = match parse_degradation(d, spec.rng_seed)? {
                Some(mode) => degrade(&truth, &mode)?,
                None => truth.mask.clone(),
            };
            save_mask(&a.out.join("pred").join(&file), &pred)?;
        }
        println!(
            "{name}: {} branches, {:.3} mm, dims {:?}",
            truth.branches.len(),
            truth.total_length_mm,
            truth.mask.dims()
        );
    }
    Ok(EXIT_OK)
}

fn cmd_skeletonize(
    mask: &Path,
    out: Option<&Path>,
    json: Option<&Path>,
    threshold: Option<f64>,
    min_branch_mm: f64,
    file: ConfigFile,
) -> Result<i32, CliError> {
    let cfg = RunConfig::resolve(
        Overrides {
            threshold,
            min_branch_mm: Some(min_branch_mm),
            no_cache: true,
            ..Overrides::default()
        },
        file,
    )?;
    let m = load_mask(mask, cfg.threshold)?;
    let skel = centerline(&m, cfg.min_branch_mm);
    if let Some(p) = out {
        save_mask(p, &skel.to_mask())?;
    }
    let export = skel.export();
    if let Some(p) = json {
        let text = serde_json::to_string_pretty(&export).map_err(Error::from)? + "\n";
        tables::write_bytes(p, text.as_bytes())?;
    }
    let s = &export.summary;
    println!("voxels      {}", s.voxels);
    println!("branches    {}", s.branches);
    println!("junctions   {}", s.branch_points);
    println!("end points  {}", s.end_points);
    println!("length mm   {:.3}", s.tree_length_mm);
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_figures() {
        assert_eq!(sig3(0.6), "0.600");
        assert_eq!(sig3(1.0), "1.00");
        assert_eq!(sig3(-1.0), "-1.00");
        assert_eq!(sig3(0.96842), "0.968");
        assert_eq!(sig3(0.0123456), "0.0123");
    }

    #[test]
    fn degradation_syntax() {
        assert_eq!(parse_degradation("identity", 0).unwrap(), None);
        assert_eq!(
            parse_degradation("break:3:2", 0).unwrap(),
            Some(Degradation::BreakBranch { branch: 3, gap: 2 })
        );
        assert!(parse_degradation("erase", 0).is_err());
        assert!(parse_degradation("melt:1", 0).is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(main_with(["treeval", "nonsense"]), EXIT_USAGE);
        assert_eq!(main_with(["treeval", "batch", "--jobs", "0", "--pred", ".", "--gt", "."]), EXIT_USAGE);
    }
}

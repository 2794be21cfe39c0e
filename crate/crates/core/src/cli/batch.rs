use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::tables;
use super::CliError;
use crate::error::Error;
use crate::metrics::{evaluate_case, SkeletonCache};
use crate::ranking::CaseResult;
use crate::volume::{case_stem, load_mask};

/// One prediction / ground-truth pairing. A missing side makes the case an error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CasePair {
    pub case_id: String,
    pub pred: Option<PathBuf>,
    pub gt: Option<PathBuf>,
}

fn volumes_by_stem(dir: &Path) -> Result<BTreeMap<String, PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Data(Error::io(dir, e)))?;
    let mut out = BTreeMap::new();
    for e in entries.flatten() {
        let p = e.path();
        if !p.is_file() {
            continue;
        }
        if let Some(stem) = case_stem(&p) {
            if let Some(prev) = out.insert(stem.clone(), p.clone()) {
                return Err(CliError::Usage(format!(
                    "case {stem} appears twice in {}: {} and {}",
                    dir.display(),
                    prev.display(),
                    p.display()
                )));
            }
        }
    }
    Ok(out)
}

/// Pairs volumes in two directories by file stem.
pub fn pair_by_stem(pred_dir: &Path, gt_dir: &Path) -> Result<Vec<CasePair>, CliError> {
    let mut preds = volumes_by_stem(pred_dir)?;
    let gts = volumes_by_stem(gt_dir)?;
    let mut out: Vec<CasePair> = gts
        .into_iter()
        .map(|(case_id, gt)| CasePair {
            pred: preds.remove(&case_id),
            case_id,
            gt: Some(gt),
        })
        .collect();
    out.extend(preds.into_iter().map(|(case_id, pred)| CasePair {
        case_id,
        pred: Some(pred),
        gt: None,
    }));
    out.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    Ok(out)
}

/// Reads an explicit pairing table with columns `case_id,pred,gt`.
/// Relative paths resolve against the table's directory.
pub fn read_pairs(path: &Path) -> Result<Vec<CasePair>, CliError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let f = fs::File::open(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(f);
    let bad = |m: String| CliError::Usage(format!("{}: {m}", path.display()));
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column {name}")))
    };
    let (ci, pi, gi) = (col("case_id")?, col("pred")?, col("gt")?);
    let mut out = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let case_id = rec.get(ci).unwrap_or_default().to_string();
        if !seen.insert(case_id.clone()) {
            return Err(bad(format!("case {case_id} listed twice")));
        }
        let resolve = |s: Option<&str>| s.filter(|s| !s.is_empty()).map(|s| base.join(s));
        out.push(CasePair {
            case_id,
            pred: resolve(rec.get(pi)),
            gt: resolve(rec.get(gi)),
        });
    }
    out.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseRecord {
    pub case_id: String,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub pred: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub pred_sha256: Option<String>,
    pub gt_sha256: Option<String>,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub n_cases: usize,
    pub n_ok: usize,
    pub n_error: usize,
    pub cases: Vec<CaseRecord>,
}

pub struct BatchOutput {
    pub results: Vec<CaseResult>,
    pub manifest: RunManifest,
}

fn file_sha256(path: &Path) -> Option<String> {
    let bytes = fs::read(path).ok()?;
    Some(hex::encode(Sha256::digest(&bytes)))
}

fn named(path: &Path, e: Error) -> String {
    match e {
        Error::Io { .. } => e.to_string(),
        _ => format!("{}: {e}", path.display()),
    }
}

fn run_case(pair: &CasePair, cfg: &RunConfig, cache: Option<&SkeletonCache>) -> (CaseResult, CaseRecord) {
    let t0 = Instant::now();
    let outcome = (|| -> Result<_, String> {
        let pred = pair.pred.as_ref().ok_or("unpaired: no prediction")?;
        let gt = pair.gt.as_ref().ok_or("unpaired: no ground truth")?;
        let p = load_mask(pred, cfg.threshold).map_err(|e| named(pred, e))?;
        let g = load_mask(gt, cfg.threshold).map_err(|e| named(gt, e))?;
        evaluate_case(&pair.case_id, &p, &g, &cfg.eval_options(), cache).map_err(|e| e.to_string())
    })();
    let seconds = t0.elapsed().as_secs_f64();
    let mut record = CaseRecord {
        case_id: pair.case_id.clone(),
        status: "ok",
        message: None,
        pred: pair.pred.clone(),
        gt: pair.gt.clone(),
        pred_sha256: pair.pred.as_deref().and_then(file_sha256),
        gt_sha256: pair.gt.as_deref().and_then(file_sha256),
        seconds,
    };
    let result = match outcome {
        Ok(m) => CaseResult::Ok(m),
        Err(message) => {
            log::warn!("{}: {message}", pair.case_id);
            record.status = "error";
            record.message = Some(message.clone());
            CaseResult::Failed {
                case_id: pair.case_id.clone(),
                message,
            }
        }
    };
    (result, record)
}

/// Evaluates every pair on a pool of `cfg.jobs` workers. Failures are
/// recorded per case and never abort the batch.
pub fn run_batch(pairs: &[CasePair], cfg: &RunConfig) -> Result<BatchOutput, CliError> {
    if pairs.is_empty() {
        return Err(CliError::Data(Error::Parse("no cases found".into())));
    }
    let cache = cfg.cache_dir.as_ref().map(SkeletonCache::with_dir);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", cfg.jobs)))?;
    let done: Vec<(CaseResult, CaseRecord)> =
        pool.install(|| pairs.par_iter().map(|p| run_case(p, cfg, cache.as_ref())).collect());
    let (results, cases): (Vec<_>, Vec<_>) = done.into_iter().unzip();
    let n_ok = results.iter().filter(|r| matches!(r, CaseResult::Ok(_))).count();
    let manifest = RunManifest {
        tool: "treeval",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        n_cases: cases.len(),
        n_ok,
        n_error: cases.len() - n_ok,
        cases,
    };
    Ok(BatchOutput { results, manifest })
}

/// Writes `results.csv` and `manifest.json` into `out`.
pub fn write_outputs(out: &Path, batch: &BatchOutput) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Data(Error::io(out, e)))?;
    tables::write_results(&out.join("results.csv"), &batch.results).map_err(CliError::Data)?;
    let json = serde_json::to_string_pretty(&batch.manifest).map_err(|e| CliError::Data(e.into()))?;
    tables::write_bytes(&out.join("manifest.json"), (json + "\n").as_bytes()).map_err(CliError::Data)
}

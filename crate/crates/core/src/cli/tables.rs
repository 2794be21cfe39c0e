//! CSV formats: per-case results, leaderboards and published team means.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{CaseMetrics, TreeCoverage};
use crate::ranking::{aggregate, CaseResult, Leaderboard, LeaderboardEntry, MetricSummary, TeamAggregate};
use crate::volume::ConfusionCounts;

pub const METRIC_NAMES: [&str; 6] = ["TD", "BD", "DSC", "Precision", "Sen", "Spe"];

const RESULT_HEADER: [&str; 17] = [
    "case_id", "status", "TD", "BD", "DSC", "Precision", "Sen", "Spe", "tp", "fp", "fn", "tn", "t_det_mm", "t_ref_mm",
    "b_det", "b_ref", "message",
];

fn f3(v: f64) -> String {
    format!("{v:.3}")
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Parse(format!("{}: {e}", path.display()))
}

/// Writes per-case rows sorted by case id. Failed cases keep their row with
/// status `error`, empty metric fields and the message.
pub fn write_results(path: &Path, rows: &[CaseResult]) -> Result<()> {
    let mut sorted: Vec<&CaseResult> = rows.iter().collect();
    sorted.sort_by(|a, b| a.case_id().cmp(b.case_id()));
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = csv_err(path);
    w.write_record(RESULT_HEADER).map_err(&err)?;
    for r in sorted {
        let rec: Vec<String> = match r {
            CaseResult::Ok(m) => {
                let c = &m.confusion;
                let mut v = vec![m.case_id.clone(), "ok".into()];
                v.extend(m.values().map(f3));
                v.extend([c.tp, c.fp, c.fn_, c.tn].map(|n| n.to_string()));
                v.push(f3(m.coverage.t_det));
                v.push(f3(m.coverage.t_ref));
                v.push(m.coverage.b_det.to_string());
                v.push(m.coverage.b_ref.to_string());
                v.push(m.warnings.join("; "));
                v
            }
            CaseResult::Failed { case_id, message } => {
                let mut v = vec![case_id.clone(), "error".into()];
                v.extend(std::iter::repeat_n(String::new(), 14));
                v.push(message.clone());
                v
            }
        };
        w.write_record(&rec).map_err(&err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<csv::Reader<fs::File>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(f))
}

struct Columns(BTreeMap<String, usize>);

impl Columns {
    fn new(headers: &csv::StringRecord) -> Columns {
        Columns(headers.iter().enumerate().map(|(i, h)| (h.to_string(), i)).collect())
    }

    fn has(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    fn str<'r>(&self, rec: &'r csv::StringRecord, name: &str) -> Option<&'r str> {
        self.0.get(name).and_then(|&i| rec.get(i)).filter(|s| !s.is_empty())
    }

    fn num<T: std::str::FromStr>(&self, rec: &csv::StringRecord, name: &str, path: &Path) -> Result<Option<T>> {
        match self.str(rec, name) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| Error::Parse(format!("{}: `{s}` in column {name} is not a number", path.display()))),
        }
    }
}

fn parse_case(cols: &Columns, rec: &csv::StringRecord, path: &Path, row: usize) -> Result<CaseResult> {
    let case_id = cols.str(rec, "case_id").unwrap_or_default().to_string();
    let case_id = if case_id.is_empty() { format!("row{row}") } else { case_id };
    let status = cols.str(rec, "status").unwrap_or("ok");
    if status != "ok" {
        return Ok(CaseResult::Failed {
            case_id,
            message: cols.str(rec, "message").unwrap_or(status).to_string(),
        });
    }
    let mut v = [0.0; 6];
    for (slot, name) in v.iter_mut().zip(METRIC_NAMES) {
        *slot = cols
            .num(rec, name, path)?
            .ok_or_else(|| Error::Parse(format!("{}: case {case_id} lacks {name}", path.display())))?;
    }
    let count = |name: &str| -> Result<u64> { Ok(cols.num(rec, name, path)?.unwrap_or(0)) };
    Ok(CaseResult::Ok(CaseMetrics {
        case_id,
        td: v[0],
        bd: v[1],
        dsc: v[2],
        precision: v[3],
        sen: v[4],
        spe: v[5],
        confusion: ConfusionCounts {
            tp: count("tp")?,
            fp: count("fp")?,
            fn_: count("fn")?,
            tn: count("tn")?,
        },
        coverage: TreeCoverage {
            t_det: cols.num(rec, "t_det_mm", path)?.unwrap_or(0.0),
            t_ref: cols.num(rec, "t_ref_mm", path)?.unwrap_or(0.0),
            b_det: cols.num(rec, "b_det", path)?.unwrap_or(0),
            b_ref: cols.num(rec, "b_ref", path)?.unwrap_or(0),
            per_branch_coverage: Vec::new(),
        },
        warnings: Vec::new(),
    }))
}

/// Reads a results CSV. With a `team` column the rows are grouped by team;
/// otherwise every row belongs to `default_team`.
pub fn read_results(path: &Path, default_team: &str) -> Result<BTreeMap<String, Vec<CaseResult>>> {
    let mut rdr = open(path)?;
    let cols = Columns::new(rdr.headers().map_err(csv_err(path))?);
    if !cols.has("case_id") && !cols.has("TD") {
        return Err(Error::Parse(format!("{}: not a results table", path.display())));
    }
    let mut out: BTreeMap<String, Vec<CaseResult>> = BTreeMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let team = cols.str(&rec, "team").unwrap_or(default_team).to_string();
        out.entry(team).or_default().push(parse_case(&cols, &rec, path, row + 1)?);
    }
    Ok(out)
}

/// Aggregates from a results CSV or a per-team directory tree.
pub fn team_cases(inputs: &[&Path]) -> Result<BTreeMap<String, Vec<CaseResult>>> {
    let mut out: BTreeMap<String, Vec<CaseResult>> = BTreeMap::new();
    let mut add = |path: &Path, team: &str| -> Result<()> {
        for (t, rows) in read_results(path, team)? {
            out.entry(t).or_default().extend(rows);
        }
        Ok(())
    };
    for &input in inputs {
        if input.is_dir() {
            let mut entries: Vec<_> = fs::read_dir(input)
                .map_err(|e| Error::io(input, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .collect();
            entries.sort();
            for p in entries {
                let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                if p.is_dir() && p.join("results.csv").is_file() {
                    add(&p.join("results.csv"), &stem)?;
                } else if p.extension().is_some_and(|e| e == "csv") {
                    add(&p, &stem)?;
                }
            }
        } else {
            let team = if input.file_name().is_some_and(|n| n == "results.csv") {
                input.parent().and_then(|d| d.file_name())
            } else {
                input.file_stem()
            };
            let team = team.and_then(|s| s.to_str()).unwrap_or("team").to_string();
            add(input, &team)?;
        }
    }
    Ok(out)
}

pub fn aggregate_all(cases: &BTreeMap<String, Vec<CaseResult>>) -> Vec<TeamAggregate> {
    cases.iter().map(|(team, rows)| aggregate(team, rows)).collect()
}

/// Reads published per-team means: a `team` column plus TD, BD, DSC and
/// Precision, optionally Sen, Spe, `<metric>_std` and `n_cases`.
pub fn read_summary(path: &Path) -> Result<Vec<TeamAggregate>> {
    let mut rdr = open(path)?;
    let cols = Columns::new(rdr.headers().map_err(csv_err(path))?);
    for need in ["team", "TD", "BD", "DSC", "Precision"] {
        if !cols.has(need) {
            return Err(Error::Parse(format!("{}: missing column {need}", path.display())));
        }
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let team = cols.str(&rec, "team").unwrap_or_default().to_string();
        let mut s = [MetricSummary::default(); 6];
        for (slot, name) in s.iter_mut().zip(METRIC_NAMES) {
            slot.mean = cols.num(&rec, name, path)?.unwrap_or(0.0);
            slot.std = cols.num(&rec, &format!("{name}_std"), path)?.unwrap_or(0.0);
        }
        let n = cols.num(&rec, "n_cases", path)?.unwrap_or(1);
        out.push(TeamAggregate::from_summary(&team, s, n));
    }
    Ok(out)
}

fn board_header() -> Vec<String> {
    let mut h: Vec<String> = vec!["rank".into(), "team".into(), "score".into()];
    for m in &METRIC_NAMES[..4] {
        h.push(format!("{m}_mean"));
        h.push(format!("{m}_std"));
    }
    h.push("n_cases".into());
    h
}

pub fn board_csv(board: &Leaderboard) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let perr = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(board_header()).map_err(perr)?;
    for e in &board.entries {
        let mut rec = vec![e.rank.to_string(), e.team_id.clone(), f3(e.score)];
        for s in &e.aggregate.summaries()[..4] {
            rec.push(f3(s.mean));
            rec.push(f3(s.std));
        }
        rec.push(e.aggregate.n_cases.to_string());
        w.write_record(&rec).map_err(perr)?;
    }
    w.into_inner().map_err(|e| Error::Parse(e.to_string()))
}

/// Reads a leaderboard CSV; `rank` defaults to the row position.
pub fn read_board(path: &Path) -> Result<Leaderboard> {
    let mut rdr = open(path)?;
    let cols = Columns::new(rdr.headers().map_err(csv_err(path))?);
    if !cols.has("team") {
        return Err(Error::Parse(format!("{}: missing column team", path.display())));
    }
    let mut entries = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let team = cols
            .str(&rec, "team")
            .ok_or_else(|| Error::Parse(format!("{}: row {} has no team", path.display(), i + 1)))?;
        entries.push(LeaderboardEntry {
            rank: cols.num(&rec, "rank", path)?.unwrap_or(i + 1),
            team_id: team.to_string(),
            score: cols.num(&rec, "score", path)?.unwrap_or(f64::NAN),
            aggregate: TeamAggregate::from_summary(team, Default::default(), 0),
        });
    }
    let mut board = Leaderboard::from_order(&[]);
    board.entries = entries;
    Ok(board)
}

/// Per-team metric arrays in leaderboard order, for external box plots.
pub fn plot_data(board: &Leaderboard, cases: &BTreeMap<String, Vec<CaseResult>>) -> serde_json::Value {
    let teams: Vec<serde_json::Value> = board
        .entries
        .iter()
        .map(|e| {
            let mut obj = serde_json::Map::new();
            obj.insert("team".into(), e.team_id.clone().into());
            let ok: Vec<&CaseMetrics> = cases
                .get(&e.team_id)
                .into_iter()
                .flatten()
                .filter_map(|c| match c {
                    CaseResult::Ok(m) => Some(m),
                    CaseResult::Failed { .. } => None,
                })
                .collect();
            for (k, name) in METRIC_NAMES.iter().enumerate() {
                let values: Vec<f64> = ok.iter().map(|m| m.values()[k]).collect();
                obj.insert(name.to_string(), values.into());
            }
            serde_json::Value::Object(obj)
        })
        .collect();
    serde_json::json!({ "metrics": METRIC_NAMES, "teams": teams })
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

//! Ranks published team means under the mean and weighted score presets.

use std::path::Path;

use treeval::cli::tables::read_summary;
use treeval::ranking::{kendall_tau, rank, ScoreWeights};

fn main() -> treeval::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/test_team_means.csv");
    let teams = read_summary(&path)?;
    let mean = rank(&teams, &ScoreWeights::MEAN, false)?;
    let weighted = rank(&teams, &ScoreWeights::WEIGHTED, true)?;
    println!("{:>4}  {:<16} {:>8}   {:>4} {:>8}", "rank", "team", "mean", "rank", "weighted");
    for e in &mean.entries {
        let w = weighted.entries.iter().find(|w| w.team_id == e.team_id).unwrap();
        println!("{:>4}  {:<16} {:>8.3}   {:>4} {:>8.3}", e.rank, e.team_id, e.score, w.rank, w.score);
    }
    let k = kendall_tau(&mean, &weighted)?;
    println!("tau {:.3}, {} discordant pairs", k.tau, k.discordant);
    Ok(())
}

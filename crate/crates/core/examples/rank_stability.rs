//! Kendall's tau-b between two leaderboards, and between raw score vectors.

use std::path::Path;

use treeval::cli::tables::read_board;
use treeval::ranking::{kendall_tau, tau_b};

fn main() -> treeval::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let a = read_board(&data.join("validation_board.csv"))?;
    let b = read_board(&data.join("test_board.csv"))?;
    let k = kendall_tau(&a, &b)?;
    println!(
        "validation vs test: tau {:.3}, p {:.2e}, {} concordant, {} discordant",
        k.tau, k.p_value, k.concordant, k.discordant
    );
    for team in a.order().iter().take(5) {
        println!("  {team:<14} {} -> {}", a.rank_of(team).unwrap(), b.rank_of(team).unwrap());
    }

    let x = [1.0, 2.0, 2.0, 3.0, 4.0, 5.0];
    let y = [1.0, 3.0, 2.0, 2.0, 5.0, 4.0];
    let t = tau_b(&x, &y)?;
    println!("with ties: tau_b {:.4}, p {:.3}", t.tau, t.p_value);
    Ok(())
}

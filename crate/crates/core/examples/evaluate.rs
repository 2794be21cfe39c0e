//! Scores a degraded phantom against its ground truth.

use treeval::cli::metrics_table;
use treeval::phantom::{degrade, generate, Degradation, PhantomSpec};
use treeval::{evaluate_case, EvalOptions};

fn main() -> treeval::Result<()> {
    let truth = generate(&PhantomSpec { depth: 4, ..PhantomSpec::default() }.fitted(2)?)?;
    let opts = EvalOptions::default();
    let cases = [
        ("identity", None),
        ("dilate", Some(Degradation::Dilate)),
        ("erase_2", Some(Degradation::EraseSubtree { branch: 2 })),
        ("break_1", Some(Degradation::BreakBranch { branch: 1, gap: 3 })),
        ("noise", Some(Degradation::NoiseBlob { size: 200, seed: 7 })),
    ];
    let mut rows = Vec::new();
    for (name, mode) in cases {
        let pred = match mode {
            Some(m) => degrade(&truth, &m)?,
            None => truth.mask.clone(),
        };
        rows.push(evaluate_case(name, &pred, &truth.mask, &opts, None)?);
    }
    print!("{}", metrics_table(&rows));
    for r in &rows {
        println!(
            "{:>8}: {}/{} branches, {:.1}/{:.1} mm",
            r.case_id, r.coverage.b_det, r.coverage.b_ref, r.coverage.t_det, r.coverage.t_ref
        );
    }
    Ok(())
}

//! Runs a small phantom batch on a worker pool and writes results.csv and
//! manifest.json.

use treeval::cli::batch::{pair_by_stem, run_batch, write_outputs};
use treeval::cli::config::{ConfigFile, Overrides, RunConfig};
use treeval::phantom::{degrade, generate, Degradation, PhantomSpec};
use treeval::save_mask;

fn main() -> anyhow::Result<()> {
    let root = std::env::temp_dir().join("treeval_batch_example");
    let _ = std::fs::remove_dir_all(&root);
    for dir in ["gt", "pred"] {
        std::fs::create_dir_all(root.join(dir))?;
    }
    for i in 0..6u64 {
        let spec = PhantomSpec {
            length_jitter: 0.2,
            rng_seed: i,
            ..PhantomSpec::default()
        };
        let truth = generate(&spec.fitted(2)?)?;
        let pred = degrade(&truth, &Degradation::EraseSubtree { branch: 1 + i as usize })?;
        save_mask(&root.join(format!("gt/case_{i:02}.nii.gz")), &truth.mask)?;
        save_mask(&root.join(format!("pred/case_{i:02}.nii.gz")), &pred)?;
    }

    let cfg = RunConfig::resolve(
        Overrides {
            out: Some(root.join("run")),
            jobs: Some(2),
            ..Overrides::default()
        },
        ConfigFile::default(),
    )?;
    let pairs = pair_by_stem(&root.join("pred"), &root.join("gt"))?;
    let out = run_batch(&pairs, &cfg)?;
    write_outputs(&cfg.out, &out)?;
    println!("{} ok, {} error", out.manifest.n_ok, out.manifest.n_error);
    print!("{}", std::fs::read_to_string(cfg.out.join("results.csv"))?);
    Ok(())
}

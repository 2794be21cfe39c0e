//! Generates a phantom, prints its branch table and writes the truth sidecar.

use treeval::phantom::{generate, PhantomSpec};

fn main() -> treeval::Result<()> {
    let spec = PhantomSpec {
        depth: 3,
        root_radius_vox: 3.0,
        length_jitter: 0.2,
        rng_seed: 42,
        ..PhantomSpec::default()
    }
    .fitted(2)?;
    let truth = generate(&spec)?;
    println!("grid {:?}, {} branches, {:.3} mm", spec.dims, truth.branches.len(), truth.total_length_mm);
    for b in &truth.branches {
        println!(
            "{:2} parent {:>4} gen {} r {:.2} dir {:?} {:6.2} mm",
            b.id,
            b.parent.map_or("-".into(), |p| p.to_string()),
            b.generation,
            b.radius_vox,
            b.direction,
            b.length_mm
        );
    }
    let out = std::env::temp_dir().join("treeval_phantom.json");
    truth.write_truth(&out)?;
    println!("truth written to {}", out.display());
    Ok(())
}

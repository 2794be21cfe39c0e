//! Thins a phantom tree to its centerline and lists the parsed branches.

use treeval::phantom::{generate, PhantomSpec};
use treeval::topology::{centerline, Terminal};

fn main() -> treeval::Result<()> {
    let truth = generate(&PhantomSpec::default().fitted(2)?)?;
    let skel = centerline(&truth.mask, 0.0);
    println!(
        "{} mask voxels -> {} centerline voxels, {} end points, {} junctions",
        truth.mask.count(),
        skel.len(),
        skel.end_points.len(),
        skel.junctions.len()
    );
    let kind = |t: Terminal| match t {
        Terminal::EndPoint(_) => "end",
        Terminal::Junction(_) => "junction",
        Terminal::Cycle => "cycle",
        Terminal::Isolated => "isolated",
    };
    for (i, b) in skel.branches.iter().enumerate() {
        println!(
            "branch {i:2}: {:>8} -> {:<8} {:3} voxels {:7.3} mm",
            kind(b.start),
            kind(b.end),
            b.path.len(),
            b.length_mm
        );
    }
    println!("tree length {:.3} mm, analytic {:.3} mm", skel.tree_length(), truth.total_length_mm);
    Ok(())
}

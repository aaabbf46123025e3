//! Refinement study on perturbed polygonal meshes with observed and
//! theoretical rates.

use wgmfem::analysis::{run_convergence, ConvergenceStudy, MeshFamily, SolutionKind};

fn main() -> wgmfem::Result<()> {
    for k in 0..=1 {
        let study = ConvergenceStudy {
            family: MeshFamily::Perturbed { jitter: 0.2, seed: 1 },
            n0: 4,
            levels: 4,
            degree: k,
            solution: SolutionKind::SinsinVariable,
            ..ConvergenceStudy::default()
        };
        let report = run_convergence(&study)?;
        print!("{}", report.to_csv_string());
        for c in report.check(0.2) {
            println!("  {}: observed {} target {} -> {}", c.quantity, c.observed, c.target, if c.passed { "ok" } else { "off" });
        }
    }
    Ok(())
}

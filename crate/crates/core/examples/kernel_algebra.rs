//! Kernel projector of `AD` and the Sherman–Morrison inverse on random
//! instances.

use bellman_core::linalg::{kernel_algebra_check, kernel_projection};
use bellman_core::ColumnSystem;

fn main() -> bellman_core::Result<()> {
    let sys = ColumnSystem::basis_plus(&[0.6, 0.6])?;
    let p = kernel_projection(&sys, &[0.3, 0.4, -0.5])?;
    println!("rank of the kernel projector: {}", p.rank());
    let r = kernel_algebra_check(100, 1, 1e-10)?;
    for (k, v) in &r.extras {
        println!("{k:>18}: {v:.2e}");
    }
    println!("{:?}", r.verdict);
    Ok(())
}
